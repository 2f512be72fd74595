//! The one-phase scheme: a negative control.
//!
//! Alice skips the buffering phase. She buffers every packet she receives
//! from Jack and generates her own departure clock from the sped-up density
//! `p(x/(1-rho4)) / (1-rho4)` with `rho4 = epsilon / sqrt(2 c N)`. At each
//! departure event she forwards a buffered packet of Jack if one is there;
//! if not, she sends a packet of her own. The run spans the transmission of
//! Jack's first `n` packets.
//!
//! Unlike the two-phase scheme this does not reach the square-root scaling:
//! the own-packet count `N_a` has no diverging lower threshold that is met
//! with probability approaching one.

use crate::error::{Error, Result};
use crate::renewal::{IpdDistribution, PacketStream};
use crate::seed;
use crate::stats::fisher_constant_c;

/// What a one-phase run produced.
#[derive(Debug, Clone)]
pub struct OnePhaseOutcome {
    /// Packets of Alice's own that were sent (`N_a`): departure events that
    /// found the buffer empty.
    pub own_packets: usize,
    /// All departure events within the run (relays plus own packets).
    pub total_transmitted: usize,
    /// Packets of Jack still buffered when the run ends.
    pub final_buffer: usize,
    /// Buffer occupancy after every arrival and departure event, in time
    /// order; never negative by construction.
    pub buffer_trajectory: Vec<u32>,
    /// The speed-up actually used.
    pub rho4: f64,
}

/// Runs the one-phase scheme over Jack's first `n` packets.
///
/// `dist` is Jack's IPD law; it fixes the Fisher constant behind `rho4` and
/// the shape of Alice's departure clock. `epsilon = 0` gives `rho4 = 0`:
/// Alice's events reproduce an independent renewal with Jack's own law and
/// the buffer performs a driftless random walk.
pub fn one_phase_run(
    jack: &PacketStream,
    n: usize,
    epsilon: f64,
    dist: &IpdDistribution,
    seed: u64,
) -> Result<OnePhaseOutcome> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if jack.len() < n {
        return Err(Error::StreamTooShort(format!(
            "need {n} packets, stream has {}",
            jack.len()
        )));
    }
    if !(epsilon.is_finite() && (0.0..1.0).contains(&epsilon)) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    let c = fisher_constant_c(dist)?;
    let rho4 = epsilon / (2.0 * c * n as f64).sqrt();
    if !(0.0..1.0).contains(&rho4) {
        return Err(Error::InvalidParameter(format!(
            "derived rho4 {rho4} is outside [0, 1)"
        )));
    }

    let end = jack.arrival(n).expect("n <= len");
    let sampler = dist.sampler()?;
    let mut rng = seed::rng(seed);
    let arrivals = &jack.packets()[..n];

    let mut buffer: u32 = 0;
    let mut own_packets = 0usize;
    let mut total_transmitted = 0usize;
    let mut trajectory = Vec::with_capacity(2 * n + 16);
    let mut next_arrival = 0usize;
    let mut event_time = 0.0;

    loop {
        event_time += (1.0 - rho4) * sampler.sample(&mut rng);
        if event_time > end {
            break;
        }
        // Arrivals strictly before (or tied with) the event are banked
        // first, so a packet arriving at the event instant is available.
        while next_arrival < n && arrivals[next_arrival].time <= event_time {
            buffer += 1;
            trajectory.push(buffer);
            next_arrival += 1;
        }
        total_transmitted += 1;
        if buffer > 0 {
            buffer -= 1;
        } else {
            own_packets += 1;
        }
        trajectory.push(buffer);
    }
    // Arrivals after Alice's last event still land in her buffer.
    while next_arrival < n {
        buffer += 1;
        trajectory.push(buffer);
        next_arrival += 1;
    }

    Ok(OnePhaseOutcome {
        own_packets,
        total_transmitted,
        final_buffer: buffer as usize,
        buffer_trajectory: trajectory,
        rho4,
    })
}
