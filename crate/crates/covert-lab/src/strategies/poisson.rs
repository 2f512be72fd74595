//! Poisson superposition insertion.
//!
//! On a Poisson channel of rate `lambda`, Alice generates an independent
//! Poisson process of rate `delta = epsilon * sqrt(2 lambda / T)` and
//! inserts one packet of her own at each of its points. The superposition
//! is again Poisson, with rate `lambda + delta`; the count budget keeps the
//! relative entropy between the two count laws at or below `2 epsilon^2`.

use crate::error::{Error, Result};
use crate::renewal::{merge_streams, sample_stream, IpdDistribution, PacketStream, Source, StopRule};

/// Insertion budget for a Poisson channel over a fixed horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonInsertionPlan {
    lambda: f64,
    horizon: f64,
    epsilon: f64,
    delta: f64,
}

impl PoissonInsertionPlan {
    /// Builds a plan with the full budget `delta = epsilon sqrt(2 lambda/T)`
    /// (the covertness argument permits anything up to that rate; equality
    /// maximizes throughput). `epsilon = 0` degenerates to no insertion.
    pub fn new(lambda: f64, horizon: f64, epsilon: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(epsilon.is_finite() && (0.0..1.0).contains(&epsilon)) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        Ok(PoissonInsertionPlan {
            lambda,
            horizon,
            epsilon,
            delta: epsilon * (2.0 * lambda / horizon).sqrt(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Alice's insertion rate.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Expected number of inserted packets, `delta * T`.
    pub fn expected_insertions(&self) -> f64 {
        self.delta * self.horizon
    }
}

/// Superimposes a fresh Alice-tagged Poisson(`delta`) stream on Jack's.
///
/// Jack's timestamps pass through unmodified; the output is the sorted
/// union. With `delta = 0` the output is Jack's stream unchanged.
pub fn poisson_insertion(
    jack: &PacketStream,
    plan: &PoissonInsertionPlan,
    seed: u64,
) -> Result<PacketStream> {
    match jack.horizon() {
        Some(h) if h == plan.horizon => {}
        Some(h) => {
            return Err(Error::PlanMismatch(format!(
                "stream horizon {h} differs from plan horizon {}",
                plan.horizon
            )));
        }
        None => {
            if jack.last_time().is_some_and(|t| t > plan.horizon) {
                return Err(Error::PlanMismatch(format!(
                    "stream extends past plan horizon {}",
                    plan.horizon
                )));
            }
        }
    }
    if plan.delta == 0.0 {
        return Ok(jack.clone());
    }
    let alice_law = IpdDistribution::exponential(plan.delta)?;
    let alice = sample_stream(&alice_law, StopRule::Horizon(plan.horizon), seed)?
        .with_source(Source::Alice);
    Ok(merge_streams(jack, &alice))
}
