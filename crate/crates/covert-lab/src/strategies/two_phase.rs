//! The two-phase buffer-and-replace scheme for renewal channels.
//!
//! Phase 1 (buffering): Alice relays Jack's packets untouched while Bob
//! relays packet `i` at `arrival(i) / (1 - rho2)`, building a backlog of
//! `m` packets by the time he relays packet `floor(psi N)`. Alice knows
//! Jack's timings and `rho2`, so she computes `m` by simulating Bob's
//! buffer.
//!
//! Phase 2 (replacement): Alice relays Jack's packets at their original
//! times but replaces a Bernoulli(`rho3`)-selected subset with packets of
//! her own, stopping after `m` replacements; the held-back packets of Jack
//! stay in her buffer. Bob substitutes his buffered packets for Alice's
//! one-for-one, keeping Jack's order, and delays every phase-2 departure by
//! `phi`, the gap between his last phase-1 receipt and the end of phase 1.
//! The delay makes his phase-2 IPD sequence — including the first one —
//! exactly Jack's original IPD sequence from index `floor(psi N) + m + 1`
//! on.
//!
//! The run ends when Alice has transmitted `n_total` packets in all, after
//! which Bob's pipeline drains; Bob's buffer is then empty and Alice holds
//! the `m` packets of Jack she replaced.

use rand::Rng;

use super::buffer::buffer_count;
use crate::error::{Error, Result};
use crate::renewal::{extend_stream, sample_stream, IpdDistribution, Packet, PacketStream, Source, StopRule};
use crate::seed;
use crate::stats::fisher_constant_c;

/// Parameters of a two-phase run.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhasePlan {
    dist: IpdDistribution,
    n_total: usize,
    psi: f64,
    epsilon: f64,
    fisher_c: f64,
    rho2: f64,
}

impl TwoPhasePlan {
    /// Plan with the budget-derived slowdown
    /// `rho2 = epsilon * sqrt(1 / (c N psi))`.
    pub fn new(dist: IpdDistribution, n_total: usize, psi: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && (0.0..1.0).contains(&epsilon)) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        let fisher_c = fisher_constant_c(&dist)?;
        let (n_total, psi) = Self::validate_shape(n_total, psi)?;
        let rho2 = epsilon / (fisher_c * n_total as f64 * psi).sqrt();
        if rho2 >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "derived rho2 {rho2} is not below 1; n_total too small for this budget"
            )));
        }
        Ok(TwoPhasePlan {
            dist,
            n_total,
            psi,
            epsilon,
            fisher_c,
            rho2,
        })
    }

    /// Plan with an explicit slowdown, bypassing the budget derivation.
    /// Used for hand-enumerable fixtures and degenerate (`rho2 = 0`) runs.
    pub fn with_rho2(dist: IpdDistribution, n_total: usize, psi: f64, rho2: f64) -> Result<Self> {
        if !(rho2.is_finite() && (0.0..1.0).contains(&rho2)) {
            return Err(Error::InvalidParameter(format!(
                "rho2 must lie in [0, 1), got {rho2}"
            )));
        }
        let fisher_c = fisher_constant_c(&dist)?;
        let (n_total, psi) = Self::validate_shape(n_total, psi)?;
        let epsilon = rho2 * (fisher_c * n_total as f64 * psi).sqrt();
        Ok(TwoPhasePlan {
            dist,
            n_total,
            psi,
            epsilon,
            fisher_c,
            rho2,
        })
    }

    fn validate_shape(n_total: usize, psi: f64) -> Result<(usize, f64)> {
        if n_total == 0 {
            return Err(Error::InvalidParameter("n_total must be positive".into()));
        }
        if !(psi.is_finite() && psi > 0.0 && psi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "psi must lie in (0, 1), got {psi}"
            )));
        }
        if (psi * n_total as f64).floor() < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "phase 1 is empty: floor(psi * n_total) = 0 for psi {psi}, n_total {n_total}"
            )));
        }
        Ok((n_total, psi))
    }

    pub fn dist(&self) -> &IpdDistribution {
        &self.dist
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The Fisher constant of the channel law, cached at plan build time.
    pub fn fisher_c(&self) -> f64 {
        self.fisher_c
    }

    pub fn rho2(&self) -> f64 {
        self.rho2
    }

    /// Number of packets Bob relays in phase 1: `floor(psi * n_total)`.
    pub fn phase1_count(&self) -> usize {
        (self.psi * self.n_total as f64).floor() as usize
    }

    /// Replacement probability once the backlog `n_b` is known:
    /// `2 n_b / (N (1 - psi))`, capped at 1. The cap keeps the expected
    /// number of replacement opportunities at about twice the target, so
    /// falling short is exponentially rare.
    pub fn rho3(&self, n_b: usize) -> f64 {
        (2.0 * n_b as f64 / (self.n_total as f64 * (1.0 - self.psi))).min(1.0)
    }
}

/// Everything a two-phase run produces.
#[derive(Debug, Clone)]
pub struct TwoPhaseOutcome {
    /// The `n_total` packets Alice transmits (phase-1 relays plus phase-2
    /// relays and replacements), at Jack's original times.
    pub alice_output: PacketStream,
    /// Bob's departures: slowed relays in phase 1, then buffered packets of
    /// Jack on the phase-2 arrival clock shifted by `phi`.
    pub bob_output: PacketStream,
    /// Replacements Alice achieved (equals `m` when `complete`).
    pub n_b: usize,
    /// Bob's backlog at the end of phase 1, the replacement target.
    pub m: usize,
    /// End of phase 1: `arrival(floor(psi N)) / (1 - rho2)`.
    pub phase_boundary: f64,
    /// 1-based indices of Jack's packets Alice replaced, all in phase 2.
    pub replaced_indices: Vec<usize>,
    /// Bob's phase-2 holding delay.
    pub phi: f64,
    /// Whether all `m` replacements were placed before Alice's quota ran
    /// out. The trial is otherwise reported as incomplete with the achieved
    /// count rather than failing.
    pub complete: bool,
}

/// Runs the two-phase scheme against a given Jack stream.
///
/// `seed` drives only Alice's Bernoulli replacement decisions. The stream
/// must hold at least `n_total` packets and determine the arrival count at
/// the scaled phase-1 end time; otherwise `StreamTooShort` asks the caller
/// for a longer stream.
pub fn two_phase_run(
    jack: &PacketStream,
    plan: &TwoPhasePlan,
    seed: u64,
) -> Result<TwoPhaseOutcome> {
    let n = plan.n_total;
    if jack.len() < n {
        return Err(Error::StreamTooShort(format!(
            "need {n} packets, stream has {}",
            jack.len()
        )));
    }
    let k1 = plan.phase1_count();
    let rho2 = plan.rho2;
    let m = buffer_count(jack, k1, rho2)?;
    if k1 + m >= n {
        return Err(Error::InvalidParameter(format!(
            "phase 1 spans {} packets, leaving no phase 2 within n_total {n}",
            k1 + m
        )));
    }
    let t0 = jack.arrival(k1).expect("k1 <= len") / (1.0 - rho2);
    let phi = t0 - jack.arrival(k1 + m).expect("k1+m < n");
    let rho3 = plan.rho3(m);

    let packets = jack.packets();
    let mut rng = seed::rng(seed);
    let mut alice = Vec::with_capacity(n);
    let mut bob = Vec::with_capacity(n - m);
    let mut replaced_indices = Vec::with_capacity(m);

    // Phase 1: Alice relays everything Jack sent up to t0; Bob departs on
    // the slowed clock.
    for p in &packets[..k1 + m] {
        alice.push(*p);
    }
    for p in &packets[..k1] {
        bob.push(Packet {
            time: p.time / (1.0 - rho2),
            source: Source::Jack,
        });
    }

    // Phase 2: one Bob departure per Alice transmission, delayed by phi.
    // Bob's buffer holds m packets at entry, gains one per relayed packet
    // of Jack, and loses one per departure, so it drains to m - n_b >= 0.
    for (idx0, p) in packets[k1 + m..n].iter().enumerate() {
        let jack_index = k1 + m + idx0 + 1;
        let replace = replaced_indices.len() < m && rng.random::<f64>() < rho3;
        if replace {
            replaced_indices.push(jack_index);
        }
        alice.push(Packet {
            time: p.time,
            source: if replace { Source::Alice } else { Source::Jack },
        });
        bob.push(Packet {
            time: p.time + phi,
            source: Source::Jack,
        });
    }

    let n_b = replaced_indices.len();
    let complete = n_b == m;
    Ok(TwoPhaseOutcome {
        alice_output: PacketStream::new(alice, None)?,
        bob_output: PacketStream::new(bob, None)?,
        n_b,
        m,
        phase_boundary: t0,
        replaced_indices,
        phi,
        complete,
    })
}

/// A run together with the Jack stream that produced it.
#[derive(Debug, Clone)]
pub struct TwoPhaseTrial {
    pub jack: PacketStream,
    pub outcome: TwoPhaseOutcome,
}

/// Samples a Jack stream long enough for the plan and runs the scheme.
///
/// The stream is drawn in count mode with a `ceil((1 + 2 rho2) N)` margin;
/// on the rare shortage it is extended with further seed-derived draws
/// rather than resampled, so trials stay reproducible.
pub fn two_phase_trial(plan: &TwoPhasePlan, seed: u64) -> Result<TwoPhaseTrial> {
    let n = plan.n_total;
    let gen_len = (n as f64 * (1.0 + 2.0 * plan.rho2)).ceil() as usize + 64;
    let mut jack = sample_stream(plan.dist(), StopRule::Count(gen_len), seed::child(seed, 0))?;
    let run_seed = seed::child(seed, 1);
    for attempt in 0..32 {
        match two_phase_run(&jack, plan, run_seed) {
            Err(Error::StreamTooShort(_)) => {
                extend_stream(&mut jack, plan.dist(), n / 8 + 64, seed::child(seed, 2 + attempt))?;
            }
            Err(e) => return Err(e),
            Ok(outcome) => return Ok(TwoPhaseTrial { jack, outcome }),
        }
    }
    Err(Error::StreamTooShort(
        "stream still too short after 32 extensions".into(),
    ))
}
