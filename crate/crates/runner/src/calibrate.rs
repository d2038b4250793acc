//! Calibration of per-scheme source configurations from device parameters.
//!
//! Every scheme is normalized to the same full-brightness response: against
//! a perfectly transmissive scene the expected detected signal per
//! acquisition equals `full_bright`. For the heralded scheme the calibrated
//! quantity is the signal-arm singles level, so its coincidence count at
//! full brightness is eta_h times the calibration. Because the signal-arm
//! calibration divides out the channel and detector efficiencies, equal
//! calibration implies equal transmitter photons per acquisition across
//! schemes. The noise level nu sets the expected accumulated background to
//! nu times the calibration, making it a background-to-signal ratio.

use spi_core::photostat::{Scheme, SchemeConfig};
use spi_core::Result;

/// Bench constants shared by every scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    /// Acquisition time per pattern, seconds.
    pub t_aq: f64,
    /// Coincidence window, seconds.
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
    /// Heralding efficiency (coincidences per signal count).
    pub eta_h: f64,
    /// Channel transmission.
    pub eta_0: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
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
}

/// Builds the calibrated configuration of one scheme at background level
/// `noise_level` and pulse width `t_w`. Continuous-wave and heralded sources
/// ignore `t_w` and run for the whole acquisition.
pub fn scheme_config(
    scheme: Scheme,
    noise_level: f64,
    t_w: f64,
    devices: &DeviceParams,
    full_bright: f64,
) -> Result<SchemeConfig> {
    let t_w = match scheme {
        Scheme::Pspi => t_w,
        Scheme::Cspi | Scheme::Qspi => devices.t_aq,
    };
    let mut cfg = SchemeConfig {
        scheme,
        n_bar_s: 0.0,
        n_bar_b: 0.0,
        t_w,
        t_aq: devices.t_aq,
        t_c: devices.t_c,
        tau_sc: devices.tau_sc,
        tau_sq: devices.tau_sq,
        tau_i: devices.tau_i,
        tau_b: devices.tau_b,
        eta_d: devices.eta_d,
        eta_h: devices.eta_h,
        eta_0: devices.eta_0,
    };
    cfg.n_bar_s = full_bright / (cfg.signal_blocks() * cfg.eta_d * cfg.eta_0);
    cfg.n_bar_b = noise_level * full_bright / (cfg.background_blocks() * cfg.eta_d);
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use spi_core::photostat::{equal_power_signal, expected_count};

    const BRIGHT: f64 = 12_000.0;

    #[test]
    fn full_bright_response_matches_the_calibration() {
        let d = DeviceParams::default();
        for (scheme, scale) in [
            (Scheme::Cspi, 1.0),
            (Scheme::Pspi, 1.0),
            (Scheme::Qspi, d.eta_h),
        ] {
            let cfg = scheme_config(scheme, 0.0, 1e-3, &d, BRIGHT).unwrap();
            let got = expected_count(&cfg, 1.0).unwrap();
            let want = BRIGHT * scale;
            assert!(
                (got - want).abs() < 1e-9 * want,
                "{}: {got} vs {want}",
                scheme.label()
            );
        }
    }

    #[test]
    fn background_scales_with_the_noise_level() {
        let d = DeviceParams::default();
        for nu in [0.0, 1.0, 36.0, 120.0] {
            let cfg = scheme_config(Scheme::Cspi, nu, 1e-3, &d, BRIGHT).unwrap();
            let mu_b = cfg.mean_background().unwrap();
            assert!((mu_b - nu * BRIGHT).abs() <= 1e-9 * (1.0 + nu * BRIGHT));
        }
    }

    #[test]
    fn calibrated_schemes_already_share_transmitter_power() {
        let d = DeviceParams::default();
        let quantum = scheme_config(Scheme::Qspi, 36.0, 1e-3, &d, BRIGHT).unwrap();
        for scheme in [Scheme::Cspi, Scheme::Pspi] {
            let cfg = scheme_config(scheme, 36.0, 1e-3, &d, BRIGHT).unwrap();
            let balanced = equal_power_signal(&cfg, &quantum).unwrap();
            assert!(
                (balanced.n_bar_s - cfg.n_bar_s).abs() <= 1e-12 * cfg.n_bar_s,
                "{}: {} vs {}",
                scheme.label(),
                balanced.n_bar_s,
                cfg.n_bar_s
            );
        }
    }

    #[test]
    fn pulse_width_applies_to_the_pulsed_scheme_only() {
        let d = DeviceParams::default();
        let pulsed = scheme_config(Scheme::Pspi, 0.0, 75e-3, &d, BRIGHT).unwrap();
        assert_eq!(pulsed.t_w, 75e-3);
        for scheme in [Scheme::Cspi, Scheme::Qspi] {
            let cfg = scheme_config(scheme, 0.0, 75e-3, &d, BRIGHT).unwrap();
            assert_eq!(cfg.t_w, d.t_aq);
        }
    }

    #[test]
    fn idler_singles_recover_the_pre_channel_rate() {
        let d = DeviceParams::default();
        let cfg = scheme_config(Scheme::Qspi, 0.0, 1e-3, &d, BRIGHT).unwrap();
        let mu_i = cfg.mean_idler().unwrap();
        let want = BRIGHT / d.eta_0; // 800k idler counts per acquisition
        assert!((mu_i - want).abs() < 1e-6 * want);
    }

    #[test]
    fn narrower_pulses_suppress_more_background() {
        let d = DeviceParams::default();
        let narrow = scheme_config(Scheme::Pspi, 100.0, 1e-3, &d, BRIGHT).unwrap();
        let wide = scheme_config(Scheme::Pspi, 100.0, 75e-3, &d, BRIGHT).unwrap();
        let dark = expected_count(&narrow, 0.0).unwrap();
        let dark_wide = expected_count(&wide, 0.0).unwrap();
        assert!(dark < dark_wide);
        let ratio = dark / (100.0 * BRIGHT);
        assert!((ratio - 1e-3 / d.t_aq).abs() < 1e-12);
    }
}
