//! Photon-counting statistics for the three imaging schemes.
//!
//! Detected counts accumulate over many source coherence times per
//! acquisition. Within one coherence time the detected photon number follows
//! Bose-Einstein statistics for thermal light (background, and each marginal
//! of a photon-pair source) or Poisson statistics for coherent light. Over
//! L such blocks the accumulated count mu is approximately normal with mean
//! L*N and variance L*sigma^2, and the photoelectric record of one
//! acquisition is a Poisson draw around the composed rate:
//!
//!   conventional: I ~ Poi(mu_sc + mu_b)
//!   quantum:      I ~ Poi(mu_sq*eta_h + mu_b*mu_i*T_c/T_aq)
//!   pulsed:       I ~ Poi(mu_sc + mu_b*T_w/T_aq)
//!
//! Gating is what separates the schemes: heralded coincidences admit
//! background only within the window T_c per idler count, and pulse-synchronous
//! gating admits background only within the pulse width T_w.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};

/// Imaging scheme selecting how signal and background compose into counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Continuous-wave classical source; counts integrate over the whole
    /// acquisition with no gating.
    Cspi,
    /// Photon-pair source; the signal arm is heralded by idler coincidences
    /// within the window T_c.
    Qspi,
    /// Pulsed classical source; correlation against the known pulse template
    /// gates the background down to the pulse width T_w.
    Pspi,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Cspi => "cspi",
            Scheme::Qspi => "qspi",
            Scheme::Pspi => "pspi",
        }
    }
}

/// Source, channel, and detector parameters for one scheme.
///
/// Times are seconds. `n_bar_s` is the mean signal photon number per source
/// coherence time (the classical or pair-source brightness depending on the
/// scheme role); `n_bar_b` is the background brightness per its coherence
/// time. A continuous-wave config uses `t_w == t_aq`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Signal photons per coherence time at the source.
    pub n_bar_s: f64,
    /// Background photons per coherence time at the detector input.
    pub n_bar_b: f64,
    /// Pulse width (equals `t_aq` for continuous-wave operation).
    pub t_w: f64,
    /// Acquisition time per pattern.
    pub t_aq: f64,
    /// Coincidence window.
    pub t_c: f64,
    /// Classical source coherence time.
    pub tau_sc: f64,
    /// Pair-source signal coherence time.
    pub tau_sq: f64,
    /// Idler coherence time.
    pub tau_i: f64,
    /// Background coherence time.
    pub tau_b: f64,
    /// Detector efficiency.
    pub eta_d: f64,
    /// Heralding efficiency: measured coincidences per signal count.
    pub eta_h: f64,
    /// Channel transmission from source to detector.
    pub eta_0: f64,
}

impl SchemeConfig {
    /// Checks parameter domains and the time ordering T_c < T_w <= T_aq,
    /// and requires at least one coherence block per accumulation.
    pub fn validate(&self) -> Result<()> {
        let times = [
            ("t_w", self.t_w),
            ("t_aq", self.t_aq),
            ("t_c", self.t_c),
            ("tau_sc", self.tau_sc),
            ("tau_sq", self.tau_sq),
            ("tau_i", self.tau_i),
            ("tau_b", self.tau_b),
        ];
        for (name, v) in times {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(self.t_c < self.t_w && self.t_w <= self.t_aq) {
            return Err(Error::InvalidArgument(format!(
                "need t_c < t_w <= t_aq, got {} / {} / {}",
                self.t_c, self.t_w, self.t_aq
            )));
        }
        for (name, v) in [
            ("eta_d", self.eta_d),
            ("eta_h", self.eta_h),
            ("eta_0", self.eta_0),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} outside (0, 1]"
                )));
            }
        }
        for (name, v) in [("n_bar_s", self.n_bar_s), ("n_bar_b", self.n_bar_b)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be non-negative"
                )));
            }
        }
        for (name, l) in [
            ("signal", self.signal_blocks()),
            ("idler", self.idler_blocks()),
            ("background", self.background_blocks()),
        ] {
            if l < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "fewer than one {name} coherence block per accumulation"
                )));
            }
        }
        Ok(())
    }

    /// Coherence blocks accumulated by the signal arm. The classical source
    /// emits only within the pulse window; the pair source runs continuously.
    pub fn signal_blocks(&self) -> f64 {
        match self.scheme {
            Scheme::Qspi => self.t_aq / self.tau_sq,
            Scheme::Cspi | Scheme::Pspi => self.t_w / self.tau_sc,
        }
    }

    /// Idler coherence blocks per acquisition.
    pub fn idler_blocks(&self) -> f64 {
        self.t_aq / self.tau_i
    }

    /// Background coherence blocks per acquisition.
    pub fn background_blocks(&self) -> f64 {
        self.t_aq / self.tau_b
    }

    /// Per-block detected signal moments at overlap `chi_tilde`.
    ///
    /// The pair-source marginal stays thermal under loss; the coherent
    /// classical beam stays Poissonian.
    pub fn signal_moments(&self, chi_tilde: f64) -> Result<(f64, f64)> {
        match self.scheme {
            Scheme::Qspi => {
                bose_einstein_moments(self.n_bar_s * self.eta_0 * chi_tilde, self.eta_d)
            }
            Scheme::Cspi | Scheme::Pspi => {
                let mean = self.eta_d * self.eta_0 * chi_tilde * self.n_bar_s;
                Ok((mean, mean))
            }
        }
    }

    /// Per-block detected idler moments (thermal, no channel loss).
    pub fn idler_moments(&self) -> Result<(f64, f64)> {
        bose_einstein_moments(self.n_bar_s, self.eta_d)
    }

    /// Per-block detected background moments (thermal).
    pub fn background_moments(&self) -> Result<(f64, f64)> {
        bose_einstein_moments(self.n_bar_b, self.eta_d)
    }

    /// Mean accumulated background counts per acquisition, E[mu_b].
    pub fn mean_background(&self) -> Result<f64> {
        Ok(self.background_blocks() * self.background_moments()?.0)
    }

    /// Mean accumulated idler counts per acquisition, E[mu_i].
    pub fn mean_idler(&self) -> Result<f64> {
        Ok(self.idler_blocks() * self.idler_moments()?.0)
    }

    /// Mean accumulated signal counts per acquisition at overlap chi_tilde.
    pub fn mean_signal(&self, chi_tilde: f64) -> Result<f64> {
        Ok(self.signal_blocks() * self.signal_moments(chi_tilde)?.0)
    }
}

/// Detected photon-number moments of a lossy thermal mode: mean n_bar*eta,
/// variance mean*(mean + 1). Loss maps thermal light to thermal light, so
/// the Bose-Einstein form survives with the scaled mean.
pub fn bose_einstein_moments(n_bar: f64, eta: f64) -> Result<(f64, f64)> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "thermal occupation {n_bar} must be non-negative"
        )));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!(
            "efficiency {eta} outside [0, 1]"
        )));
    }
    let mean = n_bar * eta;
    Ok((mean, mean * (mean + 1.0)))
}

/// One accumulated count over `blocks` coherence times: a normal draw with
/// mean blocks*mean and variance blocks*variance, clamped at zero since a
/// photon tally cannot go negative. Non-integer block counts enter as-is.
pub fn sample_accumulated<R: Rng + ?Sized>(
    mean: f64,
    variance: f64,
    blocks: f64,
    rng: &mut R,
) -> f64 {
    assert!(
        mean >= 0.0 && variance >= 0.0 && blocks >= 1.0,
        "accumulation needs mean >= 0, variance >= 0, blocks >= 1"
    );
    let total_mean = blocks * mean;
    let sigma = (blocks * variance).sqrt();
    if sigma == 0.0 {
        return total_mean;
    }
    let draw = Normal::new(total_mean, sigma)
        .expect("finite accumulation moments")
        .sample(rng);
    draw.max(0.0)
}

/// Poisson photoelectric draw at rate `lambda` (counts per acquisition).
pub fn poisson_count<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    assert!(lambda >= 0.0 && lambda.is_finite(), "rate must be finite");
    if lambda == 0.0 {
        return 0;
    }
    Poisson::new(lambda)
        .expect("positive finite rate")
        .sample(rng) as u64
}

/// Expected detected counts for one pattern with overlap `chi_tilde`.
pub fn expected_count(cfg: &SchemeConfig, chi_tilde: f64) -> Result<f64> {
    cfg.validate()?;
    check_overlap(chi_tilde)?;
    let mu_b = cfg.mean_background()?;
    let mu_s = cfg.mean_signal(chi_tilde)?;
    Ok(match cfg.scheme {
        Scheme::Cspi => mu_s + mu_b,
        Scheme::Qspi => mu_s * cfg.eta_h + mu_b * cfg.mean_idler()? * cfg.t_c / cfg.t_aq,
        Scheme::Pspi => mu_s + mu_b * cfg.t_w / cfg.t_aq,
    })
}

/// Simulates the detected counts of one acquisition: accumulated signal,
/// idler, and background draws composed into the scheme rate, then one
/// Poisson photoelectric draw.
pub fn sample_count<R: Rng + ?Sized>(
    cfg: &SchemeConfig,
    chi_tilde: f64,
    rng: &mut R,
) -> Result<u64> {
    cfg.validate()?;
    check_overlap(chi_tilde)?;
    let (s_mean, s_var) = cfg.signal_moments(chi_tilde)?;
    let mu_s = sample_accumulated(s_mean, s_var, cfg.signal_blocks(), rng);
    let (b_mean, b_var) = cfg.background_moments()?;
    let lambda = match cfg.scheme {
        Scheme::Cspi => {
            let mu_b = sample_accumulated(b_mean, b_var, cfg.background_blocks(), rng);
            mu_s + mu_b
        }
        Scheme::Qspi => {
            let (i_mean, i_var) = cfg.idler_moments()?;
            let mu_i = sample_accumulated(i_mean, i_var, cfg.idler_blocks(), rng);
            let mu_b = sample_accumulated(b_mean, b_var, cfg.background_blocks(), rng);
            mu_s * cfg.eta_h + mu_b * mu_i * cfg.t_c / cfg.t_aq
        }
        Scheme::Pspi => {
            let mu_b = sample_accumulated(b_mean, b_var, cfg.background_blocks(), rng);
            mu_s + mu_b * cfg.t_w / cfg.t_aq
        }
    };
    Ok(poisson_count(lambda, rng))
}

/// Rescales a classical config's source brightness so its accumulated signal
/// photons per acquisition match the given pair-source config (equal
/// transmitter power). A quantum config passes through unchanged.
pub fn equal_power_signal(cfg: &SchemeConfig, quantum: &SchemeConfig) -> Result<SchemeConfig> {
    if quantum.scheme != Scheme::Qspi {
        return Err(Error::InvalidArgument(
            "power reference must be a quantum config".into(),
        ));
    }
    if cfg.scheme == Scheme::Qspi {
        return Ok(cfg.clone());
    }
    let mut adjusted = cfg.clone();
    adjusted.n_bar_s = quantum.signal_blocks() * quantum.n_bar_s / cfg.signal_blocks();
    Ok(adjusted)
}

fn check_overlap(chi_tilde: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&chi_tilde) {
        return Err(Error::InvalidArgument(format!(
            "overlap {chi_tilde} outside [0, 1]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_pattern_rng;
    use proptest::prelude::*;

    // Bench device values used across the statistics tests.
    const T_AQ: f64 = 1.5;
    const T_C: f64 = 650e-12;
    const TAU_SC: f64 = 13.3e-6;
    const TAU_SQ: f64 = 5e-12;
    const TAU_I: f64 = 5e-12;
    const TAU_B: f64 = 681e-9;
    const ETA_D: f64 = 0.65;
    const ETA_H: f64 = 0.12;
    const ETA_0: f64 = 0.015;
    /// Full-bright detected signal counts per acquisition that the brightness
    /// values below are solved from.
    const BRIGHT: f64 = 12_000.0;

    fn bench_config(scheme: Scheme, noise_level: f64, t_w: f64) -> SchemeConfig {
        let t_w = match scheme {
            Scheme::Cspi | Scheme::Qspi => T_AQ,
            Scheme::Pspi => t_w,
        };
        let blocks = match scheme {
            Scheme::Qspi => T_AQ / TAU_SQ,
            Scheme::Cspi | Scheme::Pspi => t_w / TAU_SC,
        };
        SchemeConfig {
            scheme,
            n_bar_s: BRIGHT / (blocks * ETA_D * ETA_0),
            n_bar_b: noise_level * BRIGHT / ((T_AQ / TAU_B) * ETA_D),
            t_w,
            t_aq: T_AQ,
            t_c: T_C,
            tau_sc: TAU_SC,
            tau_sq: TAU_SQ,
            tau_i: TAU_I,
            tau_b: TAU_B,
            eta_d: ETA_D,
            eta_h: ETA_H,
            eta_0: ETA_0,
        }
    }

    #[test]
    fn thermal_moments_formula() {
        let (mean, var) = bose_einstein_moments(0.5, 0.65).unwrap();
        assert_eq!(mean, 0.5 * 0.65);
        assert_eq!(var, mean * (mean + 1.0));

        assert_eq!(bose_einstein_moments(0.0, 0.9).unwrap(), (0.0, 0.0));
        assert_eq!(bose_einstein_moments(1.0, 1.0).unwrap(), (1.0, 2.0));

        assert!(bose_einstein_moments(-1.0, 0.5).is_err());
        assert!(bose_einstein_moments(1.0, 1.5).is_err());
    }

    #[test]
    fn zero_variance_accumulation_is_deterministic() {
        let mut rng = trial_pattern_rng(1, 0, 0);
        assert_eq!(sample_accumulated(3.25, 0.0, 8.0, &mut rng), 26.0);
        assert_eq!(sample_accumulated(0.0, 0.0, 100.0, &mut rng), 0.0);
    }

    #[test]
    fn accumulated_mean_matches_moments() {
        let (mean, var) = (0.4, 0.56);
        let blocks = 2000.0;
        let mut rng = trial_pattern_rng(2, 0, 0);
        let n = 100_000;
        let total: f64 = (0..n)
            .map(|_| sample_accumulated(mean, var, blocks, &mut rng))
            .sum();
        let sample_mean = total / n as f64;
        let tol = 3.0 * (blocks * var / n as f64).sqrt();
        assert!(
            (sample_mean - blocks * mean).abs() < tol,
            "sample mean {sample_mean} vs {} +- {tol}",
            blocks * mean
        );
    }

    #[test]
    fn accumulated_draws_never_negative() {
        // Heavy clamping regime: sigma far above the mean.
        let mut rng = trial_pattern_rng(3, 0, 0);
        for _ in 0..10_000 {
            let v = sample_accumulated(0.01, 400.0, 1.0, &mut rng);
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn pulsed_background_suppression_is_exact() {
        for t_w in [1e-3, 75e-3] {
            let pulsed = bench_config(Scheme::Pspi, 50.0, t_w);
            let cw = bench_config(Scheme::Cspi, 50.0, t_w);
            let ratio =
                expected_count(&pulsed, 0.0).unwrap() / expected_count(&cw, 0.0).unwrap();
            assert!(
                (ratio - t_w / T_AQ).abs() < 1e-12,
                "t_w {t_w}: ratio {ratio}"
            );
        }
    }

    #[test]
    fn heralded_background_suppression_is_exact() {
        let quantum = bench_config(Scheme::Qspi, 50.0, 1e-3);
        let cw = bench_config(Scheme::Cspi, 50.0, 1e-3);
        let ratio = expected_count(&quantum, 0.0).unwrap() / expected_count(&cw, 0.0).unwrap();
        let expect = quantum.mean_idler().unwrap() * T_C / T_AQ;
        assert!(
            (ratio - expect).abs() < 1e-12 * expect,
            "ratio {ratio} vs {expect}"
        );
    }

    #[test]
    fn calibrated_full_bright_counts() {
        for scheme in [Scheme::Cspi, Scheme::Qspi, Scheme::Pspi] {
            let cfg = bench_config(scheme, 0.0, 1e-3);
            let expect = match scheme {
                Scheme::Qspi => BRIGHT * ETA_H,
                _ => BRIGHT,
            };
            let got = expected_count(&cfg, 1.0).unwrap();
            assert!(
                (got - expect).abs() < 1e-9 * expect,
                "{scheme:?}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn dark_and_blocked_gives_zero() {
        let mut cfg = bench_config(Scheme::Qspi, 0.0, 1e-3);
        cfg.n_bar_b = 0.0;
        assert_eq!(expected_count(&cfg, 0.0).unwrap(), 0.0);
        let mut rng = trial_pattern_rng(4, 0, 0);
        for _ in 0..100 {
            assert_eq!(sample_count(&cfg, 0.0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn sampled_mean_tracks_expected_count() {
        let cfg = bench_config(Scheme::Pspi, 20.0, 1e-3);
        let expect = expected_count(&cfg, 0.5).unwrap();
        let mut rng = trial_pattern_rng(5, 0, 0);
        let n = 100_000u64;
        let total: u64 = (0..n)
            .map(|_| sample_count(&cfg, 0.5, &mut rng).unwrap())
            .sum();
        let mean = total as f64 / n as f64;
        assert!(
            (mean - expect).abs() < 0.01 * expect,
            "sampled {mean} vs expected {expect}"
        );
    }

    #[test]
    fn thermal_background_adds_excess_variance() {
        // With n_bar_b near one photon per block, the accumulated thermal
        // variance far exceeds the Poisson floor, so the sample variance of
        // the counts must clearly exceed the mean rate.
        let mut cfg = bench_config(Scheme::Cspi, 0.0, 1e-3);
        cfg.n_bar_s = 0.0;
        cfg.n_bar_b = 1.5 / ETA_D;
        let lambda = expected_count(&cfg, 0.0).unwrap();
        let mut rng = trial_pattern_rng(6, 0, 0);
        let n = 20_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_count(&cfg, 0.0, &mut rng).unwrap() as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(
            var > 1.5 * lambda,
            "thermal excess missing: var {var} vs rate {lambda}"
        );
    }

    #[test]
    fn sampling_is_reproducible() {
        let cfg = bench_config(Scheme::Qspi, 30.0, 1e-3);
        let draw = |seed| -> Vec<u64> {
            let mut rng = trial_pattern_rng(seed, 0, 0);
            (0..50)
                .map(|_| sample_count(&cfg, 0.3, &mut rng).unwrap())
                .collect()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn equal_power_matches_accumulated_signal() {
        let quantum = bench_config(Scheme::Qspi, 0.0, 1e-3);
        let mut classical = bench_config(Scheme::Pspi, 0.0, 1e-3);
        classical.n_bar_s = 123.0;
        let adjusted = equal_power_signal(&classical, &quantum).unwrap();
        let lhs = adjusted.signal_blocks() * adjusted.n_bar_s;
        let rhs = quantum.signal_blocks() * quantum.n_bar_s;
        assert!(
            (lhs - rhs).abs() <= 1e-12 * rhs,
            "accumulated source photons {lhs} vs {rhs}"
        );

        let same = equal_power_signal(&quantum, &quantum).unwrap();
        assert_eq!(same, quantum, "quantum config must pass through");
    }

    #[test]
    fn pulse_blocks_match_hand_arithmetic() {
        // 1 ms of pulse over a 13.3 us coherence time is about 75.2 blocks.
        let cfg = bench_config(Scheme::Pspi, 0.0, 1e-3);
        assert!((cfg.signal_blocks() - 75.188).abs() < 0.01);
    }

    #[test]
    fn validation_rejects_bad_orderings() {
        let mut cfg = bench_config(Scheme::Pspi, 0.0, 1e-3);
        cfg.t_w = 2.0 * T_AQ;
        assert!(cfg.validate().is_err());
        let mut cfg = bench_config(Scheme::Pspi, 0.0, 1e-3);
        cfg.t_c = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = bench_config(Scheme::Cspi, 0.0, 1e-3);
        cfg.eta_d = 0.0;
        assert!(cfg.validate().is_err());
        let ok = bench_config(Scheme::Qspi, 10.0, 1e-3);
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn overlap_domain_is_checked() {
        let cfg = bench_config(Scheme::Cspi, 0.0, 1e-3);
        assert!(expected_count(&cfg, -0.1).is_err());
        assert!(expected_count(&cfg, 1.1).is_err());
    }

    proptest! {
        #[test]
        fn thermal_variance_never_below_mean(
            n_bar in 0.0f64..100.0,
            eta in 0.0f64..=1.0,
        ) {
            let (mean, var) = bose_einstein_moments(n_bar, eta).unwrap();
            prop_assert!(var >= mean);
        }

        #[test]
        fn expected_count_monotone_in_overlap_and_noise(
            chi_a in 0.0f64..=1.0,
            chi_b in 0.0f64..=1.0,
            nu_a in 0.0f64..=120.0,
            nu_b in 0.0f64..=120.0,
        ) {
            for scheme in [Scheme::Cspi, Scheme::Qspi, Scheme::Pspi] {
                let (lo_chi, hi_chi) = if chi_a <= chi_b { (chi_a, chi_b) } else { (chi_b, chi_a) };
                let cfg = bench_config(scheme, 40.0, 1e-3);
                prop_assert!(
                    expected_count(&cfg, lo_chi).unwrap()
                        <= expected_count(&cfg, hi_chi).unwrap()
                );

                let (lo_nu, hi_nu) = if nu_a <= nu_b { (nu_a, nu_b) } else { (nu_b, nu_a) };
                let dim = bench_config(scheme, lo_nu, 1e-3);
                let loud = bench_config(scheme, hi_nu, 1e-3);
                prop_assert!(
                    expected_count(&dim, 0.5).unwrap()
                        <= expected_count(&loud, 0.5).unwrap()
                );
            }
        }
    }
}
