//! Covert insertion constructions: Poisson superposition, covert buffering,
//! the two-phase buffer-and-replace scheme, and the one-phase negative
//! control.

mod buffer;
mod one_phase;
mod poisson;
mod two_phase;

pub use buffer::{buffer_count, phase1_mean_delay, predicted_phase1_mean_delay};
pub use one_phase::{one_phase_run, OnePhaseOutcome};
pub use poisson::{poisson_insertion, PoissonInsertionPlan};
pub use two_phase::{two_phase_run, two_phase_trial, TwoPhaseOutcome, TwoPhasePlan, TwoPhaseTrial};
