//! Target detection through an active intelligent reflecting surface (IRS).
//!
//! A base station with no line of sight to a target illuminates it through an
//! active IRS; the IRS amplifies and phase-shifts the incident signal and its
//! own sensors collect the echo over the BS-IRS-target-IRS link. The crate
//! covers the whole chain:
//!
//! - [`scene`]: geometry, path loss, steering vectors and power accounting.
//! - [`numstats`]: Gaussian and non-central chi-squared tail functions.
//! - [`detector`]: the Neyman-Pearson detector and its detection probabilities.
//! - [`beamforming`]: joint transmit/reflective beamforming.
//! - [`baselines`]: benchmark schemes.
//! - [`montecarlo`]: simulation of the received echoes and empirical rates.
//! - [`experiment`]: configuration, sweeps and CSV output for the CLI.

pub mod baselines;
pub mod beamforming;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod montecarlo;
pub mod numstats;
pub mod scene;

pub use error::{Error, Result};
