//! Covert packet insertion laboratory.
//!
//! A simulator and analysis toolkit for covert packet insertion on Poisson
//! and renewal packet channels. The crate models a channel on which an
//! authorized sender (Jack) emits packets whose inter-packet delays (IPDs)
//! follow a renewal law, a covert pair (Alice, Bob) that inserts or buffers
//! packets, and a warden (Willie) that runs statistical hypothesis tests on
//! packet timings.
//!
//! The crate is organized into five layers:
//!
//! - [`renewal`]: renewal packet streams — sampling, counting, IPD
//!   extraction, scaling, and superposition.
//! - [`stats`]: covertness quantities — relative entropies, the Fisher
//!   scaling constant, the hypothesis-testing lower bound, and regularity
//!   checks for scaled IPD densities.
//! - [`strategies`]: the insertion constructions — Poisson superposition,
//!   the two-phase buffer-and-replace scheme, and the one-phase scheme that
//!   serves as a negative control.
//! - [`detectors`]: the warden's tests — count threshold, mean-IPD
//!   threshold, the Poisson count likelihood ratio test, and Monte Carlo
//!   error estimation.
//! - [`harness`]: experiment configuration, sweeps, trace and result CSV
//!   I/O, and SVG reporting.
//!
//! All stochastic operations take explicit seeds and are deterministic for a
//! fixed seed; see [`seed`] for how child streams are derived.

pub mod detectors;
pub mod error;
pub mod harness;
pub mod renewal;
pub mod seed;
pub mod stats;
pub mod strategies;

pub use error::{Error, Result};
