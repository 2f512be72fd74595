//! Monte Carlo estimation of detector error probabilities.

use rayon::prelude::*;
use serde::Serialize;

use super::Hypothesis;
use crate::error::{Error, Result};
use crate::seed;

/// z for a two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

/// Empirical `(P_FA, P_MD)` of a detector with Wilson 95% intervals.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrialEstimate {
    pub p_fa: f64,
    pub p_md: f64,
    pub trials: usize,
    /// Wilson 95% half-width around `p_fa`.
    pub p_fa_ci: f64,
    /// Wilson 95% half-width around `p_md`.
    pub p_md_ci: f64,
    pub master_seed: u64,
}

impl TrialEstimate {
    /// `P_FA + P_MD`, the warden's error sum.
    pub fn error_sum(&self) -> f64 {
        self.p_fa + self.p_md
    }

    /// Half-width of the error sum, the two Wilson half-widths combined.
    pub fn error_sum_ci(&self) -> f64 {
        self.p_fa_ci + self.p_md_ci
    }
}

/// Wilson score half-width at 95% for `successes` out of `n`.
fn wilson_half_width(successes: usize, n: usize) -> f64 {
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
}

/// Runs `trials` independent H0 observations and `trials` H1 observations
/// through a detector and reports the empirical error rates.
///
/// `h0` and `h1` map a child seed (derived from `(master_seed, trial)`) to
/// one observation; `detect` maps an observation to a decision. Trials run
/// in parallel with order-independent accumulation, so the estimate is
/// deterministic for a fixed master seed. Generator failures carry the
/// trial index they occurred at.
pub fn estimate_error_sum<Obs, G0, G1, D>(
    h0: G0,
    h1: G1,
    detect: D,
    trials: usize,
    master_seed: u64,
) -> Result<TrialEstimate>
where
    Obs: Send,
    G0: Fn(u64) -> Result<Obs> + Sync,
    G1: Fn(u64) -> Result<Obs> + Sync,
    D: Fn(&Obs) -> Result<Hypothesis> + Sync,
{
    if trials < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 trials for a meaningful estimate, got {trials}"
        )));
    }
    let decisions_under = |h1_side: bool| -> Result<Vec<Hypothesis>> {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let tag = 2 * i as u64 + h1_side as u64;
                let s = seed::child(master_seed, tag);
                let obs = if h1_side { h1(s) } else { h0(s) };
                obs.and_then(|o| detect(&o)).map_err(|e| e.in_trial(i))
            })
            .collect()
    };
    let h0_decisions = decisions_under(false)?;
    let h1_decisions = decisions_under(true)?;
    let false_alarms = h0_decisions.iter().filter(|&&d| d == Hypothesis::H1).count();
    let misses = h1_decisions.iter().filter(|&&d| d == Hypothesis::H0).count();
    Ok(TrialEstimate {
        p_fa: false_alarms as f64 / trials as f64,
        p_md: misses as f64 / trials as f64,
        trials,
        p_fa_ci: wilson_half_width(false_alarms, trials),
        p_md_ci: wilson_half_width(misses, trials),
        master_seed,
    })
}
