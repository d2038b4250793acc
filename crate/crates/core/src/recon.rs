//! Image reconstruction from per-pattern photon counts.
//!
//! A single-pixel record pairs each projected mask P_k with one scalar count
//! I_k. The image estimate is the pattern/intensity covariance
//!
//!   G(i, j) = <P_k(i, j) * I_k> - <P_k(i, j)> * <I_k>,
//!
//! averaged over the measured patterns. Offsets common to every pattern
//! (stray light, accidental coincidences) shift <I_k> only and cancel
//! pixel-wise. When the masks run over a full paired orthogonal basis and
//! the counts are exactly proportional to the mask/scene overlap, the
//! covariance reproduces the scene up to one global scale — with M pixels
//! and counts s * overlap, the bright-pixel level is s / (4 M).

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::patterns::PatternBasis;

/// Per-pattern counts ordered against a pattern basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    /// Index of each measured pattern within the basis.
    pub pattern_ids: Vec<usize>,
    /// Detected counts for each pattern, in the same order.
    pub values: Vec<f64>,
}

impl MeasurementSeries {
    pub fn new(pattern_ids: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if pattern_ids.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} pattern ids against {} values",
                pattern_ids.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "measurement values must be finite".into(),
            ));
        }
        Ok(MeasurementSeries {
            pattern_ids,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Covariance image of a measurement series against its pattern basis.
///
/// Centers the counts first and accumulates P_k * (I_k - mean), which is
/// algebraically identical to <P I> - <P><I> but avoids the cancellation of
/// two large near-equal sums.
pub fn reconstruct(basis: &PatternBasis, series: &MeasurementSeries) -> Result<Array2<f64>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "covariance needs at least two measurements, got {n}"
        )));
    }
    if let Some(&bad) = series
        .pattern_ids
        .iter()
        .find(|&&id| id >= basis.entries.len())
    {
        return Err(Error::InvalidArgument(format!(
            "pattern id {bad} outside basis of {}",
            basis.entries.len()
        )));
    }
    let mean = series.values.iter().sum::<f64>() / n as f64;
    let mut image = Array2::<f64>::zeros((basis.rows, basis.cols));
    for (&id, &value) in series.pattern_ids.iter().zip(&series.values) {
        let centered = value - mean;
        image.zip_mut_with(&basis.entries[id].mapv(f64::from), |g, &p| {
            *g += p * centered;
        });
    }
    image.mapv_inplace(|g| g / n as f64);
    Ok(image)
}

/// Min-max normalization to [0, 1]; a constant image maps to 0.5 everywhere.
pub fn normalize_image(image: &Array2<f64>) -> Array2<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in image.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi > lo) {
        return Array2::from_elem(image.raw_dim(), 0.5);
    }
    image.mapv(|v| (v - lo) / (hi - lo))
}
