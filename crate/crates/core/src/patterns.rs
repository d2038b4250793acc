//! Structured illumination patterns for single-pixel imaging.
//!
//! The modulation basis is the natural-order Walsh-Hadamard matrix of size
//! M = rows x cols. Row k, reshaped row-major onto the 2D grid and recoded
//! +1 -> 1, -1 -> 0, gives base pattern k; its bitwise complement gives the
//! paired inverse pattern, so a full basis holds 2M binary masks. Differencing
//! a pattern against its inverse during reconstruction cancels the DC term
//! that the 0/1 recoding introduces.

use ndarray::Array2;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scene::TargetScene;

/// How a reduced pattern set is chosen when fewer than M pairs are displayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetStrategy {
    /// Keep the pairs whose base patterns have the lowest sequency rank.
    /// This keeps the coarsest spatial structure, including the all-ones
    /// pattern, and is the deterministic stand-in for an optimized
    /// compressive ordering.
    SequencyPrefix,
    /// Draw pairs uniformly without replacement from the stated seed.
    SeededRandom { seed: u64 },
}

/// A paired set of binary illumination masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternBasis {
    /// Pixel rows of every mask.
    pub rows: usize,
    /// Pixel columns of every mask.
    pub cols: usize,
    /// Masks with values in {0, 1}; base patterns first, then their inverses
    /// in the same order.
    pub entries: Vec<Array2<u8>>,
    /// Involution mapping each entry to its complement partner.
    pub pairing: Vec<usize>,
    /// Sequency rank of each entry's underlying Walsh row (shared by a base
    /// pattern and its inverse).
    pub order_labels: Vec<usize>,
}

impl PatternBasis {
    /// Number of pixels per mask, which also equals the number of base
    /// patterns in a full basis.
    pub fn pixels(&self) -> usize {
        self.rows * self.cols
    }

    /// Number of base/inverse pairs present.
    pub fn pair_count(&self) -> usize {
        self.entries.len() / 2
    }
}

/// Sign of the natural-order Walsh-Hadamard matrix at (row, col).
///
/// H[r][c] = (-1)^popcount(r AND c), the Sylvester construction written
/// bitwise.
fn walsh_sign(r: usize, c: usize) -> i32 {
    if (r & c).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Generates the full paired Walsh-Hadamard basis for a rows x cols grid.
///
/// Requires rows and cols to be powers of two with a power-of-four pixel
/// count, so the flat Walsh rows tile the 2D grid exactly. Returns M base
/// patterns followed by their M inverses; entry 0 is the all-ones mask and
/// its partner M is the all-zeros mask.
pub fn generate_hadamard(rows: usize, cols: usize) -> Result<PatternBasis> {
    if rows == 0 || cols == 0 || !rows.is_power_of_two() || !cols.is_power_of_two() {
        return Err(Error::InvalidDimension(format!(
            "pattern grid must have power-of-two sides, got {rows}x{cols}"
        )));
    }
    let m = rows * cols;
    if m.trailing_zeros() % 2 != 0 {
        return Err(Error::InvalidDimension(format!(
            "pixel count {m} must be a power of 4"
        )));
    }

    let mut entries = Vec::with_capacity(2 * m);
    let mut order_labels = Vec::with_capacity(2 * m);
    for r in 0..m {
        let mut base = Array2::<u8>::zeros((rows, cols));
        let mut sequency = 0usize;
        let mut prev = walsh_sign(r, 0);
        for c in 0..m {
            let s = walsh_sign(r, c);
            if s != prev {
                sequency += 1;
            }
            prev = s;
            base[[c / cols, c % cols]] = u8::from(s > 0);
        }
        entries.push(base);
        order_labels.push(sequency);
    }
    for k in 0..m {
        entries.push(entries[k].mapv(|v| 1 - v));
        order_labels.push(order_labels[k]);
    }

    let pairing = (0..2 * m).map(|k| (k + m) % (2 * m)).collect();
    Ok(PatternBasis {
        rows,
        cols,
        entries,
        pairing,
        order_labels,
    })
}

/// Selects `pair_count` base/inverse pairs from a paired basis.
///
/// Selected pairs keep their original relative order (bases first, then the
/// matching inverses), so selecting every pair reproduces the input basis
/// exactly under either strategy.
pub fn select_subset(
    basis: &PatternBasis,
    pair_count: usize,
    strategy: SubsetStrategy,
) -> Result<PatternBasis> {
    let n = basis.pair_count();
    if basis.entries.len() != 2 * n || n == 0 {
        return Err(Error::InvalidArgument(
            "subset selection needs a paired basis".into(),
        ));
    }
    if pair_count == 0 || pair_count > n {
        return Err(Error::InvalidArgument(format!(
            "pair_count {pair_count} outside 1..={n}"
        )));
    }

    let mut picked: Vec<usize> = match strategy {
        SubsetStrategy::SequencyPrefix => {
            let mut by_sequency: Vec<usize> = (0..n).collect();
            by_sequency.sort_by_key(|&k| basis.order_labels[k]);
            by_sequency.truncate(pair_count);
            by_sequency
        }
        SubsetStrategy::SeededRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, n, pair_count).into_vec()
        }
    };
    picked.sort_unstable();

    let mut entries = Vec::with_capacity(2 * pair_count);
    let mut order_labels = Vec::with_capacity(2 * pair_count);
    for &k in &picked {
        entries.push(basis.entries[k].clone());
        order_labels.push(basis.order_labels[k]);
    }
    for &k in &picked {
        entries.push(basis.entries[basis.pairing[k]].clone());
        order_labels.push(basis.order_labels[basis.pairing[k]]);
    }
    let pairing = (0..2 * pair_count)
        .map(|k| (k + pair_count) % (2 * pair_count))
        .collect();
    Ok(PatternBasis {
        rows: basis.rows,
        cols: basis.cols,
        entries,
        pairing,
        order_labels,
    })
}

/// Fraction of scene pixels that are both transmissive and illuminated,
/// chi-tilde = (1/M) sum P(i,j) chi(i,j).
///
/// This is the effective transmission seen by a bucket detector behind the
/// scene while the given mask is displayed.
pub fn pattern_overlap(pattern: &Array2<u8>, scene: &TargetScene) -> Result<f64> {
    if pattern.dim() != scene.mask.dim() {
        return Err(Error::InvalidDimension(format!(
            "pattern {:?} does not match scene {:?}",
            pattern.dim(),
            scene.mask.dim()
        )));
    }
    let mut hits = 0u64;
    for (&p, &x) in pattern.iter().zip(scene.mask.iter()) {
        if p > 1 || x > 1 {
            return Err(Error::InvalidArgument(
                "patterns and scene masks must be binary".into(),
            ));
        }
        hits += u64::from(p & x);
    }
    Ok(hits as f64 / pattern.len() as f64)
}
