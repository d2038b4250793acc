//! Experiment sweeps: reconstruction grids, SNR distribution sweeps,
//! offline reconstruction, and pattern export.
//!
//! Every sweep cell draws from its own derived random seed, and every
//! (trial, pattern) acquisition inside a cell uses its own counter-derived
//! stream, so outputs are bit-identical for a given config and seed
//! regardless of thread count or evaluation order. Cells of the
//! continuous-wave schemes exclude the pulse-width index from their seed
//! derivation: their physics does not depend on it, and equal seeds make
//! that invariance visible as byte-identical output rows.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;

use spi_core::metrics::{pattern_overlaps, simulate_series, snr, snr_distribution, SnrSummary};
use spi_core::patterns::{generate_hadamard, select_subset, PatternBasis};
use spi_core::pgm::{self, Pgm};
use spi_core::photostat::{Scheme, SchemeConfig};
use spi_core::recon::{normalize_image, reconstruct, MeasurementSeries};
use spi_core::rng::{derive_seed, trial_pattern_rng};
use spi_core::scene::{builtin_scene, load_scene, TargetScene};
use spi_core::timetags::{acquire_event, write_tag_file, EventOptions, TimeTagStream};
use spi_core::{Error, Result};

use crate::calibrate::{scheme_config, DeviceParams};
use crate::config::{ExperimentConfig, SceneSpec, SimMode};
use crate::csvio::{self, CsvMeta};

/// Builds the configured pattern subset out of the full paired basis.
pub fn build_basis(cfg: &ExperimentConfig) -> Result<PatternBasis> {
    let full = generate_hadamard(cfg.rows, cfg.cols)?;
    select_subset(&full, cfg.pair_count, cfg.subset_strategy())
}

/// Builds the configured scene and aligns its channel transmission with the
/// device parameters.
pub fn build_scene(cfg: &ExperimentConfig) -> Result<TargetScene> {
    let mut scene = match &cfg.scene {
        SceneSpec::Builtin(kind) => builtin_scene(*kind, cfg.rows, cfg.cols)?,
        SceneSpec::File(path) => {
            let scene = load_scene(path)?;
            if scene.mask.dim() != (cfg.rows, cfg.cols) {
                return Err(Error::InvalidDimension(format!(
                    "scene {:?} does not match the configured {}x{} frame",
                    scene.mask.dim(),
                    cfg.rows,
                    cfg.cols
                )));
            }
            scene
        }
    };
    scene.eta_0 = cfg.devices.eta_0;
    Ok(scene)
}

/// Stable per-series identifier entering seed derivation. The ideal-
/// heralding variant of the pair scheme gets its own slot.
fn series_id(scheme: Scheme) -> u64 {
    match scheme {
        Scheme::Cspi => 0,
        Scheme::Qspi => 1,
        Scheme::Pspi => 2,
    }
}

const SERIES_QSPI_IDEAL: u64 = 3;

/// Seed of one sweep cell. `tw_idx` is `None` for schemes whose statistics
/// do not involve the pulse width.
fn cell_seed(base: u64, series: u64, noise_idx: usize, tw_idx: Option<usize>) -> u64 {
    let tag = (series << 40) | ((noise_idx as u64) << 20) | tw_idx.map_or(0, |i| i as u64 + 1);
    derive_seed(base, tag)
}

/// Formats a number for file names: up to six decimals, trailing zeros
/// trimmed, decimal point rendered as `p`.
fn num_label(v: f64) -> String {
    let mut s = format!("{v:.6}");
    while s.contains('.') && s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s.replace('.', "p").replace('-', "m")
}

fn ms_label(t_w: f64) -> String {
    format!("{}ms", num_label(t_w * 1e3))
}

fn write_image_pgm(path: &Path, image: &Array2<f64>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let gray = image.mapv(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8);
    pgm::write(path, &Pgm::from_gray(&gray), true)
}

/// One full event-mode pattern sweep; patterns run in parallel on their own
/// random streams.
fn event_series(
    cfg: &SchemeConfig,
    overlaps: &[f64],
    opts: &EventOptions,
    seed: u64,
    trial: u32,
) -> Result<MeasurementSeries> {
    let values = overlaps
        .par_iter()
        .enumerate()
        .map(|(k, &chi)| {
            let mut rng = trial_pattern_rng(seed, trial, k as u32);
            Ok(acquire_event(cfg, chi, opts, &mut rng)?.count as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    MeasurementSeries::new((0..overlaps.len()).collect(), values)
}

/// Reconstructs one image per sweep cell from a single pattern sweep and
/// writes, per cell, the PGM image and the raw measurement table, plus one
/// `snr_grid.csv` scoring every cell.
pub fn run_image_grid(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let basis = build_basis(cfg)?;
    let scene = build_scene(cfg)?;
    let overlaps = pattern_overlaps(&basis, &scene)?;
    let meta = CsvMeta {
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
    };
    let opts = cfg.event_options();
    let mut files = Vec::new();
    let mut snr_rows = Vec::new();

    for &scheme in &cfg.schemes {
        for (ni, &nu) in cfg.noise_levels.iter().enumerate() {
            for (ti, &t_w) in cfg.pulse_widths.iter().enumerate() {
                // Pulse width only reaches the pulsed scheme's statistics;
                // other schemes produce one cell per noise level.
                if scheme != Scheme::Pspi && ti > 0 {
                    continue;
                }
                let tw_idx = (scheme == Scheme::Pspi).then_some(ti);
                let scfg =
                    scheme_config(scheme, nu, t_w, &cfg.devices, cfg.full_bright_counts)?;
                let seed = cell_seed(cfg.seed, series_id(scheme), ni, tw_idx);
                let series = match cfg.mode {
                    SimMode::Analytic => simulate_series(&scfg, &overlaps, seed, 0)?,
                    SimMode::Event => event_series(&scfg, &overlaps, &opts, seed, 0)?,
                };
                let image = normalize_image(&reconstruct(&basis, &series)?);
                let report = snr(&image, &scene.mask)?;

                let stem = match tw_idx {
                    Some(_) => format!(
                        "{}_nu{}_tw{}",
                        scheme.label(),
                        num_label(nu),
                        ms_label(t_w)
                    ),
                    None => format!("{}_nu{}", scheme.label(), num_label(nu)),
                };
                let image_path = cfg.out_dir.join("images").join(format!("{stem}.pgm"));
                write_image_pgm(&image_path, &image)?;
                files.push(image_path);

                let m_path = cfg.out_dir.join("measurements").join(format!("{stem}.csv"));
                let cell = format!("scheme={} noise_level={} t_w={}", scheme.label(), nu, scfg.t_w);
                csvio::write_measurements(&m_path, meta, &[cell], &series)?;
                files.push(m_path);

                if cfg.save_tags && cfg.mode == SimMode::Event {
                    files.push(save_first_tags(cfg, &scfg, &overlaps, &opts, seed, &stem)?);
                }

                snr_rows.push(format!(
                    "{},{},{},{},{},{},{},{}",
                    scheme.label(),
                    nu,
                    scfg.t_w,
                    report.snr,
                    report.mu_o,
                    report.mu_b,
                    report.sigma_o,
                    report.sigma_b
                ));
            }
        }
    }

    let grid_path = cfg.out_dir.join("snr_grid.csv");
    csvio::write_csv(
        &grid_path,
        meta,
        &[],
        "scheme,noise_level,t_w,snr,mu_o,mu_b,sigma_o,sigma_b",
        &snr_rows,
    )?;
    files.push(grid_path);
    Ok(files)
}

/// Re-runs the first pattern of a cell on its recorded stream and writes the
/// detector tags. Regeneration is exact because the acquisition is a pure
/// function of its random stream.
fn save_first_tags(
    cfg: &ExperimentConfig,
    scfg: &SchemeConfig,
    overlaps: &[f64],
    opts: &EventOptions,
    seed: u64,
    stem: &str,
) -> Result<PathBuf> {
    let mut rng = trial_pattern_rng(seed, 0, 0);
    let record = acquire_event(scfg, overlaps[0], opts, &mut rng)?;
    let path = cfg.out_dir.join("tags").join(format!("{stem}.txt"));
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut streams: Vec<&TimeTagStream> = vec![&record.signal];
    if let Some(idler) = &record.idler {
        streams.push(idler);
    }
    write_tag_file(&path, &streams)?;
    Ok(path)
}

fn require_analytic(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.mode == SimMode::Event {
        return Err(Error::InvalidArgument(
            "distribution sweeps use analytic statistics; event mode applies to the grid job"
                .into(),
        ));
    }
    Ok(())
}

/// Samples the SNR distribution over every (scheme, noise level, pulse
/// width) cell and writes one summary row per cell to `snr_surface.csv`.
/// Continuous-wave schemes repeat their per-noise summary across the pulse
/// widths, keeping the table rectangular.
pub fn run_snr_surface(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    require_analytic(cfg)?;
    if cfg.noise_levels.len() < 2 || cfg.pulse_widths.len() < 2 {
        return Err(Error::InvalidArgument(
            "a surface needs at least two noise levels and two pulse widths".into(),
        ));
    }
    let basis = build_basis(cfg)?;
    let scene = build_scene(cfg)?;
    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        for (ni, &nu) in cfg.noise_levels.iter().enumerate() {
            let mut cached: Option<SnrSummary> = None;
            for (ti, &t_w) in cfg.pulse_widths.iter().enumerate() {
                let summary = match (scheme, cached) {
                    (Scheme::Pspi, _) => {
                        let scfg = scheme_config(
                            scheme,
                            nu,
                            t_w,
                            &cfg.devices,
                            cfg.full_bright_counts,
                        )?;
                        let seed = cell_seed(cfg.seed, series_id(scheme), ni, Some(ti));
                        snr_distribution(&scfg, &basis, &scene, cfg.trials, seed)?
                    }
                    (_, Some(summary)) => summary,
                    (_, None) => {
                        let scfg = scheme_config(
                            scheme,
                            nu,
                            t_w,
                            &cfg.devices,
                            cfg.full_bright_counts,
                        )?;
                        let seed = cell_seed(cfg.seed, series_id(scheme), ni, None);
                        let summary =
                            snr_distribution(&scfg, &basis, &scene, cfg.trials, seed)?;
                        cached = Some(summary);
                        summary
                    }
                };
                rows.push(format!(
                    "{},{},{},{},{},{},{},{}",
                    scheme.label(),
                    nu,
                    t_w,
                    cfg.trials,
                    summary.p10,
                    summary.p50,
                    summary.p90,
                    summary.mean
                ));
            }
        }
    }
    let path = cfg.out_dir.join("snr_surface.csv");
    csvio::write_csv(
        &path,
        CsvMeta {
            config_hash: cfg.config_hash(),
            seed: cfg.seed,
        },
        &[],
        "scheme,noise_level,t_w,trials,p10,p50,p90,mean",
        &rows,
    )?;
    Ok(path)
}

/// Samples SNR versus noise level for every scheme and, when the pair
/// scheme is selected, an extra ideal-heralding series with eta_h = 1.
/// Writes `snr_curves.csv` with one series label per curve.
pub fn run_snr_curves(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    require_analytic(cfg)?;
    if cfg.noise_levels.len() < 2 {
        return Err(Error::InvalidArgument(
            "a curve needs at least two noise levels".into(),
        ));
    }
    let basis = build_basis(cfg)?;
    let scene = build_scene(cfg)?;

    // (series label, underlying scheme, series id, device overrides)
    let mut series: Vec<(String, Scheme, u64, DeviceParams)> = cfg
        .schemes
        .iter()
        .map(|&s| {
            (
                s.label().to_string(),
                s,
                series_id(s),
                cfg.devices.clone(),
            )
        })
        .collect();
    if cfg.schemes.contains(&Scheme::Qspi) {
        let ideal = DeviceParams {
            eta_h: 1.0,
            ..cfg.devices.clone()
        };
        series.push((
            "qspi_h1".to_string(),
            Scheme::Qspi,
            SERIES_QSPI_IDEAL,
            ideal,
        ));
    }

    let mut rows = Vec::new();
    for (label, scheme, sid, devices) in &series {
        for (ni, &nu) in cfg.noise_levels.iter().enumerate() {
            for (ti, &t_w) in cfg.pulse_widths.iter().enumerate() {
                if *scheme != Scheme::Pspi && ti > 0 {
                    continue;
                }
                let tw_idx = (*scheme == Scheme::Pspi).then_some(ti);
                let scfg = scheme_config(*scheme, nu, t_w, devices, cfg.full_bright_counts)?;
                let seed = cell_seed(cfg.seed, *sid, ni, tw_idx);
                let summary = snr_distribution(&scfg, &basis, &scene, cfg.trials, seed)?;
                rows.push(format!(
                    "{},{},{},{},{},{},{},{},{}",
                    label,
                    scheme.label(),
                    nu,
                    scfg.t_w,
                    cfg.trials,
                    summary.p10,
                    summary.p50,
                    summary.p90,
                    summary.mean
                ));
            }
        }
    }
    let path = cfg.out_dir.join("snr_curves.csv");
    csvio::write_csv(
        &path,
        CsvMeta {
            config_hash: cfg.config_hash(),
            seed: cfg.seed,
        },
        &[],
        "series,scheme,noise_level,t_w,trials,p10,p50,p90,mean",
        &rows,
    )?;
    Ok(path)
}

/// Rebuilds an image from a stored measurement table and writes it as PGM.
pub fn run_reconstruct(cfg: &ExperimentConfig, input: &Path, output: &Path) -> Result<()> {
    let basis = build_basis(cfg)?;
    let series = csvio::read_measurements(input)?;
    let image = normalize_image(&reconstruct(&basis, &series)?);
    write_image_pgm(output, &image)
}

/// Writes every configured mask as a PGM file plus a manifest table mapping
/// file index to its complement partner and ordering label.
pub fn run_export_patterns(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let basis = build_basis(cfg)?;
    let dir = cfg.out_dir.join("patterns");
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for (k, entry) in basis.entries.iter().enumerate() {
        let path = dir.join(format!("pattern_{k:04}.pgm"));
        let gray = entry.mapv(|v| v * 255);
        pgm::write(&path, &Pgm::from_gray(&gray), true)?;
        rows.push(format!("{k},{},{}", basis.pairing[k], basis.order_labels[k]));
        files.push(path);
    }
    let manifest = dir.join("manifest.csv");
    csvio::write_csv(
        &manifest,
        CsvMeta {
            config_hash: cfg.config_hash(),
            seed: cfg.seed,
        },
        &[],
        "index,pair_index,order_label",
        &rows,
    )?;
    files.push(manifest);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SubsetKind;
    use spi_core::timetags::read_tag_file;

    /// Small analytic sweep finishing in well under a second.
    fn small_config(out: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.rows = 8;
        cfg.cols = 8;
        cfg.pair_count = 16;
        cfg.noise_levels = vec![0.0, 50.0];
        cfg.pulse_widths = vec![1e-3];
        cfg.trials = 8;
        cfg.out_dir = out.to_path_buf();
        cfg
    }

    /// Microsecond-class device set for fast event-mode runs.
    fn fast_event_config(out: &Path) -> ExperimentConfig {
        let mut cfg = small_config(out);
        cfg.mode = SimMode::Event;
        cfg.schemes = vec![Scheme::Cspi, Scheme::Pspi];
        cfg.noise_levels = vec![2.0];
        cfg.pulse_widths = vec![50e-6];
        cfg.full_bright_counts = 400.0;
        cfg.devices.t_aq = 1e-3;
        cfg.devices.t_c = 1e-9;
        cfg.devices.tau_sc = 1e-6;
        cfg.devices.tau_sq = 1e-9;
        cfg.devices.tau_i = 1e-9;
        cfg.devices.tau_b = 1e-7;
        cfg.time_resolution = 1e-9;
        cfg
    }

    fn read(path: &Path) -> Vec<u8> {
        std::fs::read(path).unwrap()
    }

    #[test]
    fn grid_outputs_are_complete_and_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(&dir.path().join("a"));
        let files = run_image_grid(&cfg).unwrap();
        // Two continuous-wave schemes x two noise levels plus the pulsed
        // scheme's two cells: 6 images, 6 tables, 1 grid summary.
        assert_eq!(files.len(), 13);
        assert!(files.iter().all(|f| f.exists()));
        let grid = cfg.out_dir.join("snr_grid.csv");
        let image = cfg.out_dir.join("images").join("pspi_nu50_tw1ms.pgm");
        assert!(image.exists());

        let cfg_b = small_config(&dir.path().join("b"));
        run_image_grid(&cfg_b).unwrap();
        assert_eq!(read(&grid), read(&cfg_b.out_dir.join("snr_grid.csv")));
        assert_eq!(
            read(&image),
            read(&cfg_b.out_dir.join("images").join("pspi_nu50_tw1ms.pgm"))
        );
    }

    #[test]
    fn grid_rows_carry_the_effective_window() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path());
        run_image_grid(&cfg).unwrap();
        let text = std::fs::read_to_string(cfg.out_dir.join("snr_grid.csv")).unwrap();
        // Continuous-wave rows report t_w = t_aq; pulsed rows the swept width.
        assert!(text.contains("cspi,0,1.5,"));
        assert!(text.contains("qspi,50,1.5,"));
        assert!(text.contains("pspi,50,0.001,"));
    }

    #[test]
    fn surface_needs_a_rectangular_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.pulse_widths = vec![1e-3];
        assert!(run_snr_surface(&cfg).is_err());
        cfg.pulse_widths = vec![1e-3, 75e-3];
        cfg.noise_levels = vec![10.0];
        assert!(run_snr_surface(&cfg).is_err());
        cfg.mode = SimMode::Event;
        cfg.noise_levels = vec![0.0, 10.0];
        assert!(run_snr_surface(&cfg).is_err());
    }

    #[test]
    fn surface_repeats_cw_cells_across_pulse_widths() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.pulse_widths = vec![1e-3, 75e-3];
        cfg.trials = 6;
        let path = run_snr_surface(&cfg).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        // Header plus 3 schemes x 2 noise levels x 2 widths.
        assert_eq!(rows.len(), 1 + 12);
        let stats = |prefix: &str| -> Vec<String> {
            rows.iter()
                .filter(|r| r.starts_with(prefix))
                .map(|r| r.splitn(4, ',').nth(3).unwrap().to_string())
                .collect()
        };
        // The pair scheme's distribution is pulse-width independent: its two
        // rows per noise level agree except for the width column.
        let qspi_rows = stats("qspi,0,");
        assert_eq!(qspi_rows.len(), 2);
        let tail = |r: &str| r.splitn(2, ',').nth(1).unwrap().to_string();
        assert_eq!(tail(&qspi_rows[0]), tail(&qspi_rows[1]));
    }

    #[test]
    fn curves_add_an_ideal_heralding_series() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.schemes = vec![Scheme::Qspi];
        cfg.noise_levels = vec![10.0, 50.0];
        cfg.trials = 24;
        let path = run_snr_curves(&cfg).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let p50 = |series: &str, nu: &str| -> f64 {
            text.lines()
                .find(|l| l.starts_with(&format!("{series},qspi,{nu},")))
                .unwrap()
                .split(',')
                .nth(6)
                .unwrap()
                .parse()
                .unwrap()
        };
        // Ideal heralding collects every pair, so its median SNR dominates.
        assert!(p50("qspi_h1", "50") > p50("qspi", "50"));
        assert!(text.lines().any(|l| l.starts_with("qspi,qspi,10,")));
    }

    #[test]
    fn reconstruct_reproduces_the_grid_image() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path());
        run_image_grid(&cfg).unwrap();
        let table = cfg.out_dir.join("measurements").join("cspi_nu0.csv");
        let rebuilt = cfg.out_dir.join("rebuilt.pgm");
        run_reconstruct(&cfg, &table, &rebuilt).unwrap();
        assert_eq!(
            read(&rebuilt),
            read(&cfg.out_dir.join("images").join("cspi_nu0.pgm"))
        );
    }

    #[test]
    fn export_writes_every_mask_and_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.pair_count = 4;
        let files = run_export_patterns(&cfg).unwrap();
        assert_eq!(files.len(), 2 * 4 + 1);
        let basis = build_basis(&cfg).unwrap();
        let first = pgm::read(&cfg.out_dir.join("patterns").join("pattern_0000.pgm")).unwrap();
        let mask = first.to_matrix().unwrap().mapv(|v| u8::from(v > 0));
        assert_eq!(mask, basis.entries[0]);
        let manifest =
            std::fs::read_to_string(cfg.out_dir.join("patterns").join("manifest.csv")).unwrap();
        assert!(manifest.lines().any(|l| l == "0,4,0"));
    }

    #[test]
    fn event_grid_runs_and_saves_tags() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = fast_event_config(dir.path());
        cfg.save_tags = true;
        let files = run_image_grid(&cfg).unwrap();
        assert!(files.iter().all(|f| f.exists()));
        let tag_file = cfg.out_dir.join("tags").join("cspi_nu2.txt");
        assert!(tag_file.exists());
        let (signal, idler) = read_tag_file(&tag_file).unwrap();
        assert!(idler.is_none());
        // The first pattern passes its overlap share of the calibrated 400
        // signal counts; background adds nu x 400 on top.
        let basis = build_basis(&cfg).unwrap();
        let scene = build_scene(&cfg).unwrap();
        let chi = pattern_overlaps(&basis, &scene).unwrap()[0];
        let expected = 400.0 * chi + 2.0 * 400.0;
        let n = signal.len() as f64;
        assert!((n - expected).abs() < 5.0 * expected.sqrt(), "tags {n} vs {expected}");
    }

    #[test]
    fn random_subsets_change_the_measured_patterns() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = small_config(&dir.path().join("a"));
        a.subset_kind = SubsetKind::Random;
        a.subset_seed = 3;
        let mut b = small_config(&dir.path().join("b"));
        b.subset_kind = SubsetKind::Random;
        b.subset_seed = 4;
        let basis_a = build_basis(&a).unwrap();
        let basis_b = build_basis(&b).unwrap();
        assert_eq!(basis_a.entries.len(), basis_b.entries.len());
        assert_ne!(basis_a.order_labels, basis_b.order_labels);
    }
}
