//! Experiment configuration: flat `key = value` text with typed defaults.
//!
//! Every knob of a study lives in one struct so a run is reproducible from
//! its config file and seed alone. The canonical serialization (sorted keys,
//! one per line) doubles as the input format and feeds a 64-bit FNV-1a hash
//! that output files carry in their headers, tying results back to the exact
//! configuration that produced them.

use std::path::{Path, PathBuf};

use spi_core::patterns::SubsetStrategy;
use spi_core::photostat::Scheme;
use spi_core::scene::BuiltinScene;
use spi_core::timetags::EventOptions;
use spi_core::{Error, Result};

use crate::calibrate::DeviceParams;

/// Which masks out of the full paired basis a study projects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetKind {
    /// Lowest-sequency pairs, the deterministic default.
    Sequency,
    /// Pairs sampled without replacement using `subset_seed`.
    Random,
}

/// Analytic accumulation of count statistics, or full time-tag generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Analytic,
    Event,
}

/// Scene selection: a built-in target or a PGM file.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneSpec {
    Builtin(BuiltinScene),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub rows: usize,
    pub cols: usize,
    /// Pattern pairs to project; each pair is a mask and its complement.
    pub pair_count: usize,
    pub subset_kind: SubsetKind,
    pub subset_seed: u64,
    pub schemes: Vec<Scheme>,
    /// Background-to-signal ratios nu to sweep.
    pub noise_levels: Vec<f64>,
    /// Pulse widths in seconds to sweep (pulsed scheme only).
    pub pulse_widths: Vec<f64>,
    pub mode: SimMode,
    pub trials: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub scene: SceneSpec,
    /// Calibrated full-brightness detected signal per acquisition.
    pub full_bright_counts: f64,
    pub devices: DeviceParams,
    /// Recorded dead time between patterns; does not enter the statistics.
    pub pattern_switch_time: f64,
    pub time_resolution: f64,
    pub g2_range: f64,
    pub jitter_fwhm: f64,
    pub pulse_start: f64,
    /// Write the first sweep's time tags when running in event mode.
    pub save_tags: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            rows: 16,
            cols: 16,
            pair_count: 128,
            subset_kind: SubsetKind::Sequency,
            subset_seed: 7,
            schemes: vec![Scheme::Cspi, Scheme::Qspi, Scheme::Pspi],
            noise_levels: vec![0.0, 36.0, 72.0, 120.0],
            pulse_widths: vec![1e-3, 75e-3],
            mode: SimMode::Analytic,
            trials: 200,
            seed: 1,
            out_dir: PathBuf::from("out"),
            scene: SceneSpec::Builtin(BuiltinScene::LetterA),
            full_bright_counts: 12_000.0,
            devices: DeviceParams::default(),
            pattern_switch_time: 0.0,
            time_resolution: 100e-12,
            g2_range: 10e-9,
            jitter_fwhm: 300e-12,
            pulse_start: 0.0,
            save_tags: false,
        }
    }
}

impl ExperimentConfig {
    /// Defaults overridden by the file's `key = value` lines.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment line and unknown
    /// keys are errors.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Sets a single knob from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "rows" => self.rows = parse_num(key, value)?,
            "cols" => self.cols = parse_num(key, value)?,
            "pair_count" => self.pair_count = parse_num(key, value)?,
            "subset_strategy" => {
                self.subset_kind = match value {
                    "sequency" => SubsetKind::Sequency,
                    "random" => SubsetKind::Random,
                    other => {
                        return Err(Error::Format(format!(
                            "subset_strategy {other} is not sequency or random"
                        )))
                    }
                }
            }
            "subset_seed" => self.subset_seed = parse_num(key, value)?,
            "schemes" => self.schemes = parse_schemes(value)?,
            "noise_levels" => self.noise_levels = parse_list(key, value)?,
            "pulse_widths" => self.pulse_widths = parse_list(key, value)?,
            "mode" => {
                self.mode = match value {
                    "analytic" => SimMode::Analytic,
                    "event" => SimMode::Event,
                    other => {
                        return Err(Error::Format(format!(
                            "mode {other} is not analytic or event"
                        )))
                    }
                }
            }
            "trials" => self.trials = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "scene" => self.scene = parse_scene(value),
            "full_bright_counts" => self.full_bright_counts = parse_num(key, value)?,
            "t_aq" => self.devices.t_aq = parse_num(key, value)?,
            "t_c" => self.devices.t_c = parse_num(key, value)?,
            "tau_sc" => self.devices.tau_sc = parse_num(key, value)?,
            "tau_sq" => self.devices.tau_sq = parse_num(key, value)?,
            "tau_i" => self.devices.tau_i = parse_num(key, value)?,
            "tau_b" => self.devices.tau_b = parse_num(key, value)?,
            "eta_d" => self.devices.eta_d = parse_num(key, value)?,
            "eta_h" => self.devices.eta_h = parse_num(key, value)?,
            "eta_0" => self.devices.eta_0 = parse_num(key, value)?,
            "pattern_switch_time" => self.pattern_switch_time = parse_num(key, value)?,
            "time_resolution" => self.time_resolution = parse_num(key, value)?,
            "g2_range" => self.g2_range = parse_num(key, value)?,
            "jitter_fwhm" => self.jitter_fwhm = parse_num(key, value)?,
            "pulse_start" => self.pulse_start = parse_num(key, value)?,
            "save_tags" => {
                self.save_tags = match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(Error::Format(format!(
                            "save_tags {other} is not true or false"
                        )))
                    }
                }
            }
            other => return Err(Error::Format(format!("unknown key {other}"))),
        }
        Ok(())
    }

    /// Checks cross-field consistency before a run.
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::InvalidArgument("no schemes selected".into()));
        }
        if self.noise_levels.is_empty() {
            return Err(Error::InvalidArgument("no noise levels selected".into()));
        }
        if self.noise_levels.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "noise levels must be non-negative".into(),
            ));
        }
        if self.pulse_widths.is_empty() {
            return Err(Error::InvalidArgument("no pulse widths selected".into()));
        }
        let d = &self.devices;
        if self
            .pulse_widths
            .iter()
            .any(|&w| !(w > d.t_c && w <= d.t_aq))
        {
            return Err(Error::InvalidArgument(format!(
                "pulse widths must lie in ({}, {}]",
                d.t_c, d.t_aq
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be positive".into()));
        }
        if !(self.full_bright_counts > 0.0) {
            return Err(Error::InvalidArgument(
                "full_bright_counts must be positive".into(),
            ));
        }
        if !(self.time_resolution > 0.0 && self.time_resolution <= d.t_c) {
            return Err(Error::InvalidArgument(
                "time_resolution must lie in (0, t_c]".into(),
            ));
        }
        if !(self.g2_range >= d.t_c) {
            return Err(Error::InvalidArgument(
                "g2_range must cover the coincidence window".into(),
            ));
        }
        if !(self.jitter_fwhm >= 0.0) {
            return Err(Error::InvalidArgument(
                "jitter_fwhm must be non-negative".into(),
            ));
        }
        if !(self.pattern_switch_time >= 0.0) {
            return Err(Error::InvalidArgument(
                "pattern_switch_time must be non-negative".into(),
            ));
        }
        if !(self.pulse_start >= 0.0) {
            return Err(Error::InvalidArgument(
                "pulse_start must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Mask-selection strategy for the core pattern generator.
    pub fn subset_strategy(&self) -> SubsetStrategy {
        match self.subset_kind {
            SubsetKind::Sequency => SubsetStrategy::SequencyPrefix,
            SubsetKind::Random => SubsetStrategy::SeededRandom {
                seed: self.subset_seed,
            },
        }
    }

    /// Event-level reduction options derived from the config.
    pub fn event_options(&self) -> EventOptions {
        EventOptions {
            resolution: self.time_resolution,
            jitter_fwhm: self.jitter_fwhm,
            g2_range: self.g2_range,
            pulse_start: self.pulse_start,
        }
    }

    /// Sorted `key = value` rendering of every setting that affects the
    /// simulated statistics; parses back to an equal config up to output
    /// plumbing. `out_dir` and `save_tags` only steer what gets written
    /// where, so they stay out of the rendering and the identity hash:
    /// the same experiment hashes alike wherever its results land.
    pub fn canonical(&self) -> String {
        let d = &self.devices;
        let mut lines = vec![
            format!("cols = {}", self.cols),
            format!("eta_0 = {}", d.eta_0),
            format!("eta_d = {}", d.eta_d),
            format!("eta_h = {}", d.eta_h),
            format!("full_bright_counts = {}", self.full_bright_counts),
            format!("g2_range = {}", self.g2_range),
            format!("jitter_fwhm = {}", self.jitter_fwhm),
            format!(
                "mode = {}",
                match self.mode {
                    SimMode::Analytic => "analytic",
                    SimMode::Event => "event",
                }
            ),
            format!("noise_levels = {}", join_floats(&self.noise_levels)),
            format!("pair_count = {}", self.pair_count),
            format!("pattern_switch_time = {}", self.pattern_switch_time),
            format!("pulse_start = {}", self.pulse_start),
            format!("pulse_widths = {}", join_floats(&self.pulse_widths)),
            format!("rows = {}", self.rows),
            format!(
                "scene = {}",
                match &self.scene {
                    SceneSpec::Builtin(BuiltinScene::LetterA) => "letter-a".to_string(),
                    SceneSpec::Builtin(BuiltinScene::FullBright) => "full-bright".to_string(),
                    SceneSpec::Builtin(BuiltinScene::Empty) => "empty".to_string(),
                    SceneSpec::File(path) => path.display().to_string(),
                }
            ),
            format!(
                "schemes = {}",
                self.schemes
                    .iter()
                    .map(|s| s.label())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            format!("seed = {}", self.seed),
            format!("subset_seed = {}", self.subset_seed),
            format!(
                "subset_strategy = {}",
                match self.subset_kind {
                    SubsetKind::Sequency => "sequency",
                    SubsetKind::Random => "random",
                }
            ),
            format!("t_aq = {}", d.t_aq),
            format!("t_c = {}", d.t_c),
            format!("tau_b = {}", d.tau_b),
            format!("tau_i = {}", d.tau_i),
            format!("tau_sc = {}", d.tau_sc),
            format!("tau_sq = {}", d.tau_sq),
            format!("time_resolution = {}", self.time_resolution),
            format!("trials = {}", self.trials),
        ];
        lines.push(String::new());
        lines.join("\n")
    }

    /// FNV-1a hash of the canonical rendering, for output provenance.
    pub fn config_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.canonical().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Format(format!("{key}: cannot parse `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_num(key, v.trim()))
        .collect()
}

fn parse_schemes(value: &str) -> Result<Vec<Scheme>> {
    value
        .split(',')
        .map(|v| match v.trim() {
            "cspi" => Ok(Scheme::Cspi),
            "qspi" => Ok(Scheme::Qspi),
            "pspi" => Ok(Scheme::Pspi),
            other => Err(Error::Format(format!(
                "scheme {other} is not cspi, qspi, or pspi"
            ))),
        })
        .collect()
}

fn parse_scene(value: &str) -> SceneSpec {
    match value {
        "letter-a" => SceneSpec::Builtin(BuiltinScene::LetterA),
        "full-bright" => SceneSpec::Builtin(BuiltinScene::FullBright),
        "empty" => SceneSpec::Builtin(BuiltinScene::Empty),
        path => SceneSpec::File(PathBuf::from(path)),
    }
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
