//! Simulation kernels for single-pixel imaging in the photon-counting regime.
//!
//! The crate models a bucket-detector imaging bench that compares three
//! schemes under ambient background light: a continuous-wave classical
//! source, a heralded photon-pair source, and a pulsed classical source.
//! Scenes are binary masks, illumination uses paired Walsh-Hadamard
//! patterns, and images come from the pattern/intensity covariance.
//!
//! Two simulation depths are provided. The analytic path samples
//! per-acquisition counts directly from accumulated photon statistics
//! ([`photostat`]); the event path generates individual time tags and
//! extracts counts the way the instrument would ([`timetags`]).

pub mod error;
pub mod metrics;
pub mod patterns;
pub mod pgm;
pub mod photostat;
pub mod recon;
pub mod rng;
pub mod scene;
pub mod stats;
pub mod timetags;

pub use error::{Error, Result};
