//! Experiment orchestration for the single-pixel imaging simulator:
//! device-calibrated scheme configs, run configuration, CSV/tag output, and
//! the sweep jobs behind the command-line interface.

pub mod calibrate;
pub mod config;
pub mod csvio;
pub mod jobs;
