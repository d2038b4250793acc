//! Image-quality metrics and Monte Carlo sampling of their distributions.
//!
//! The headline figure is a two-region signal-to-noise ratio: with mean and
//! population standard deviation (mu_o, sigma_o) over the object pixels and
//! (mu_b, sigma_b) over the background pixels,
//!
//!   SNR = (mu_o - mu_b)^2 / (2 * (sigma_o + sigma_b)^2).
//!
//! The measure is invariant under affine rescaling of the image, so it reads
//! the same before or after display normalization.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::patterns::{pattern_overlap, PatternBasis};
use crate::photostat::{sample_count, SchemeConfig};
use crate::recon::{normalize_image, reconstruct, MeasurementSeries};
use crate::rng::trial_pattern_rng;
use crate::scene::TargetScene;
use crate::stats::{mean_variance, percentile};

/// Two-region contrast statistics of one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrReport {
    pub snr: f64,
    pub mu_o: f64,
    pub mu_b: f64,
    pub sigma_o: f64,
    pub sigma_b: f64,
}

/// Percentile summary of a sampled SNR distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSummary {
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
    pub mean: f64,
}

/// Object-versus-background SNR of an image. The mask marks object pixels
/// with 1; both regions must be non-empty. A zero-spread image scores 0 when
/// the region means agree and infinity when they differ.
pub fn snr(image: &Array2<f64>, object_mask: &Array2<u8>) -> Result<SnrReport> {
    if image.dim() != object_mask.dim() {
        return Err(Error::InvalidDimension(format!(
            "image {:?} against mask {:?}",
            image.dim(),
            object_mask.dim()
        )));
    }
    if object_mask.iter().any(|&m| m > 1) {
        return Err(Error::InvalidArgument("object mask must be binary".into()));
    }
    let mut object = Vec::new();
    let mut background = Vec::new();
    for (v, &m) in image.iter().zip(object_mask.iter()) {
        if m == 1 {
            object.push(*v);
        } else {
            background.push(*v);
        }
    }
    if object.is_empty() || background.is_empty() {
        return Err(Error::InvalidArgument(
            "object and background regions must both be non-empty".into(),
        ));
    }
    let (mu_o, var_o) = mean_variance(&object);
    let (mu_b, var_b) = mean_variance(&background);
    let sigma_o = var_o.sqrt();
    let sigma_b = var_b.sqrt();
    let spread = sigma_o + sigma_b;
    let delta = mu_o - mu_b;
    let snr = if spread == 0.0 {
        if delta == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (delta * delta) / (2.0 * spread * spread)
    };
    Ok(SnrReport {
        snr,
        mu_o,
        mu_b,
        sigma_o,
        sigma_b,
    })
}

/// Mask/scene overlap for every pattern in the basis.
pub fn pattern_overlaps(basis: &PatternBasis, scene: &TargetScene) -> Result<Vec<f64>> {
    basis
        .entries
        .iter()
        .map(|p| pattern_overlap(p, scene))
        .collect()
}

/// Simulates one full pattern sweep: one sampled count per basis entry, each
/// drawn from its own (seed, trial, pattern) random stream so results do not
/// depend on evaluation order.
pub fn simulate_series(
    cfg: &SchemeConfig,
    overlaps: &[f64],
    seed: u64,
    trial: u32,
) -> Result<MeasurementSeries> {
    let values = overlaps
        .iter()
        .enumerate()
        .map(|(k, &chi)| {
            let mut rng = trial_pattern_rng(seed, trial, k as u32);
            sample_count(cfg, chi, &mut rng).map(|c| c as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    MeasurementSeries::new((0..overlaps.len()).collect(), values)
}

/// Samples the SNR distribution over repeated pattern sweeps: each trial
/// simulates every pattern, reconstructs, normalizes, and scores against the
/// scene mask. Trials run in parallel; the per-(trial, pattern) random
/// streams make the outcome independent of thread count.
pub fn snr_distribution(
    cfg: &SchemeConfig,
    basis: &PatternBasis,
    scene: &TargetScene,
    trials: u32,
    seed: u64,
) -> Result<SnrSummary> {
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "distribution needs at least one trial".into(),
        ));
    }
    let overlaps = pattern_overlaps(basis, scene)?;
    let mut values = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let series = simulate_series(cfg, &overlaps, seed, trial)?;
            let image = normalize_image(&reconstruct(basis, &series)?);
            Ok(snr(&image, &scene.mask)?.snr)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, _) = mean_variance(&values);
    values.sort_by(|a, b| a.total_cmp(b));
    Ok(SnrSummary {
        p10: percentile(&values, 0.10),
        p50: percentile(&values, 0.50),
        p90: percentile(&values, 0.90),
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{generate_hadamard, select_subset, SubsetStrategy};
    use crate::photostat::Scheme;
    use crate::scene::{builtin_scene, BuiltinScene};

    /// 4x4 image with the object on the first row: object values
    /// {0.8, 0.9, 1.0, 0.9}, background eight 0.1 and four 0.3.
    fn contrast_fixture() -> (Array2<f64>, Array2<u8>) {
        let values = vec![
            0.8, 0.9, 1.0, 0.9, //
            0.1, 0.1, 0.3, 0.1, //
            0.1, 0.3, 0.1, 0.3, //
            0.1, 0.1, 0.3, 0.1,
        ];
        let image = Array2::from_shape_vec((4, 4), values).unwrap();
        let mask = Array2::from_shape_fn((4, 4), |(i, _)| u8::from(i == 0));
        (image, mask)
    }

    #[test]
    fn snr_matches_the_hand_computation() {
        let (image, mask) = contrast_fixture();
        let report = snr(&image, &mask).unwrap();
        // Object: mean 0.9, variance 0.02/4. Background: mean 1/6,
        // deviations -1/15 (x8) and 2/15 (x4), variance 24/225/12.
        let mu_o: f64 = 0.9;
        let mu_b = 1.0 / 6.0;
        let sigma_o = (0.02f64 / 4.0).sqrt();
        let sigma_b = (24.0f64 / 225.0 / 12.0).sqrt();
        let want = (mu_o - mu_b).powi(2) / (2.0 * (sigma_o + sigma_b).powi(2));
        assert!((report.snr - want).abs() < 1e-12);
        assert!((want - 9.8776).abs() < 1e-3);
        assert!((report.mu_o - mu_o).abs() < 1e-12);
        assert!((report.mu_b - mu_b).abs() < 1e-12);
        assert!((report.sigma_o - sigma_o).abs() < 1e-12);
        assert!((report.sigma_b - sigma_b).abs() < 1e-12);
    }

    #[test]
    fn degenerate_spreads_hit_the_sentinels() {
        let mask = Array2::from_shape_fn((2, 2), |(i, _)| u8::from(i == 0));
        let flat = Array2::from_elem((2, 2), 0.4);
        assert_eq!(snr(&flat, &mask).unwrap().snr, 0.0);
        let binary = Array2::from_shape_fn((2, 2), |(i, _)| f64::from(i == 0));
        assert_eq!(snr(&binary, &mask).unwrap().snr, f64::INFINITY);
    }

    #[test]
    fn snr_is_affine_invariant() {
        let (image, mask) = contrast_fixture();
        let base = snr(&image, &mask).unwrap().snr;
        let rescaled = image.mapv(|v| 3.7 * v - 11.0);
        let got = snr(&rescaled, &mask).unwrap().snr;
        assert!((got - base).abs() < 1e-9 * base);
    }

    #[test]
    fn snr_validates_mask_and_regions() {
        let (image, _) = contrast_fixture();
        let wrong_dims = Array2::<u8>::zeros((2, 2));
        assert!(snr(&image, &wrong_dims).is_err());
        let not_binary = Array2::from_elem((4, 4), 2u8);
        assert!(snr(&image, &not_binary).is_err());
        let all_object = Array2::from_elem((4, 4), 1u8);
        assert!(snr(&image, &all_object).is_err());
    }

    fn test_config(n_bar_s: f64, n_bar_b: f64) -> SchemeConfig {
        SchemeConfig {
            scheme: Scheme::Cspi,
            n_bar_s,
            n_bar_b,
            t_w: 1.5,
            t_aq: 1.5,
            t_c: 650e-12,
            tau_sc: 13.3e-6,
            tau_sq: 5e-12,
            tau_i: 5e-12,
            tau_b: 681e-9,
            eta_d: 0.65,
            eta_h: 0.12,
            eta_0: 0.015,
        }
    }

    #[test]
    fn dark_bench_collapses_the_distribution() {
        let basis = generate_hadamard(8, 8).unwrap();
        let scene = builtin_scene(BuiltinScene::LetterA, 8, 8).unwrap();
        let cfg = test_config(0.0, 0.0);
        let summary = snr_distribution(&cfg, &basis, &scene, 16, 7).unwrap();
        // Every sweep counts zero everywhere, so every trial scores zero.
        assert_eq!(summary.p10, 0.0);
        assert_eq!(summary.p90, 0.0);
        assert_eq!(summary.mean, 0.0);
    }

    #[test]
    fn distributions_are_reproducible_and_ordered() {
        let basis = select_subset(
            &generate_hadamard(8, 8).unwrap(),
            32,
            SubsetStrategy::SequencyPrefix,
        )
        .unwrap();
        let scene = builtin_scene(BuiltinScene::LetterA, 8, 8).unwrap();
        let cfg = test_config(6.0e5, 40.0);
        let a = snr_distribution(&cfg, &basis, &scene, 48, 11).unwrap();
        let b = snr_distribution(&cfg, &basis, &scene, 48, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.p10 <= a.p50 && a.p50 <= a.p90);
        assert!(a.p10.is_finite() && a.p90.is_finite() && a.mean > 0.0);
    }

    #[test]
    fn sweep_simulation_is_order_independent() {
        let basis = generate_hadamard(4, 4).unwrap();
        let scene = builtin_scene(BuiltinScene::FullBright, 4, 4).unwrap();
        let cfg = test_config(1.0e4, 10.0);
        let overlaps = pattern_overlaps(&basis, &scene).unwrap();
        let full = simulate_series(&cfg, &overlaps, 3, 9).unwrap();
        // Re-simulating any single pattern reproduces its recorded value.
        for k in [0usize, 7, 31] {
            let mut rng = trial_pattern_rng(3, 9, k as u32);
            let lone = sample_count(&cfg, overlaps[k], &mut rng).unwrap();
            assert_eq!(full.values[k], lone as f64);
        }
    }
}
