//! Covert buffering by slowdown.
//!
//! Bob relays Jack's packet `i` at `arrival(i) / (1 - rho1)`. By the time he
//! has relayed `n` packets (at `t0 = arrival(n)/(1-rho1)`), Jack has sent
//! `count(t0)` packets, so Bob holds `m = count(t0) - n` in his buffer. With
//! `rho1 = epsilon / sqrt(c n)` the backlog concentrates on the order of
//! `sqrt(n)` while the relative entropy cost stays within the covertness
//! budget.

use crate::error::{Error, Result};
use crate::renewal::{count_arrivals, PacketStream};

fn validate_rho1(rho1: f64) -> Result<()> {
    if rho1.is_finite() && (0.0..1.0).contains(&rho1) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "rho1 must lie in [0, 1), got {rho1}"
        )))
    }
}

/// Number of packets in Bob's buffer at the moment he relays his `n`-th
/// packet: `count(arrival(n)/(1-rho1)) - n`.
///
/// Deterministic in the stream. Errors with `StreamTooShort` when the
/// stream does not determine the count at the scaled time, signalling the
/// caller to generate a longer stream.
pub fn buffer_count(jack: &PacketStream, n: usize, rho1: f64) -> Result<usize> {
    validate_rho1(rho1)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let tau_n = jack.arrival(n).ok_or_else(|| {
        Error::StreamTooShort(format!("need {n} packets, stream has {}", jack.len()))
    })?;
    let t0 = tau_n / (1.0 - rho1);
    if !jack.covers(t0) {
        return Err(Error::StreamTooShort(format!(
            "arrivals known to {:?} but count needed at {t0}",
            jack.last_time()
        )));
    }
    Ok(count_arrivals(jack, t0)? - n)
}

/// Mean delay over the first `n` packets caused by the slowdown: packet `i`
/// departs `arrival(i) * rho1/(1-rho1)` late.
pub fn phase1_mean_delay(jack: &PacketStream, n: usize, rho1: f64) -> Result<f64> {
    validate_rho1(rho1)?;
    if n == 0 || jack.len() < n {
        return Err(Error::StreamTooShort(format!(
            "need {n} packets, stream has {}",
            jack.len()
        )));
    }
    let sum: f64 = jack.packets()[..n].iter().map(|p| p.time).sum();
    Ok(sum / n as f64 * rho1 / (1.0 - rho1))
}

/// Expected mean delay over `n` packets at rate `lambda`:
/// `rho1/(1-rho1) * (n+1)/2 * 1/lambda`.
pub fn predicted_phase1_mean_delay(rho1: f64, n: usize, lambda: f64) -> f64 {
    rho1 / (1.0 - rho1) * (n as f64 + 1.0) / 2.0 / lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{sample_stream, IpdDistribution, Source, StopRule};
    use crate::seed;
    use crate::stats::fisher_constant_c;

    #[test]
    fn hand_enumerated_fixture() {
        // Arrivals 1..=10, n = 5, rho1 = 0.5: scaled time 10, count 10,
        // backlog 5.
        let times: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let jack = PacketStream::from_times(&times, Source::Jack, None).unwrap();
        assert_eq!(buffer_count(&jack, 5, 0.5).unwrap(), 5);
    }

    #[test]
    fn zero_rho_means_zero_backlog() {
        let jack = sample_stream(
            &IpdDistribution::exponential(1.0).unwrap(),
            StopRule::Count(100),
            9,
        )
        .unwrap();
        assert_eq!(buffer_count(&jack, 50, 0.0).unwrap(), 0);
    }

    #[test]
    fn short_stream_is_reported() {
        let jack = PacketStream::from_times(&[1.0, 2.0], Source::Jack, None).unwrap();
        assert!(matches!(
            buffer_count(&jack, 5, 0.1),
            Err(Error::StreamTooShort(_))
        ));
        // Enough packets but coverage stops before the scaled time.
        let jack = PacketStream::from_times(&[1.0, 2.0, 3.0], Source::Jack, None).unwrap();
        assert!(matches!(
            buffer_count(&jack, 3, 0.5),
            Err(Error::StreamTooShort(_))
        ));
    }

    #[test]
    fn backlog_concentrates_at_sqrt_scale() {
        // Lighter version of the concentration sweep: n = 1e4,
        // epsilon = 0.5, 200 seeds; the acceptance suite runs the full one.
        let dist = IpdDistribution::exponential(1.0).unwrap();
        let c = fisher_constant_c(&dist).unwrap();
        let n = 10_000usize;
        let eps = 0.5;
        let rho1 = eps / (c * n as f64).sqrt();
        let lo = eps * (n as f64 / (4.0 * c)).sqrt();
        let hi = eps * (4.0 * n as f64 / c).sqrt();
        let gen_len = (n as f64 * (1.0 + 2.0 * rho1)).ceil() as usize + 64;
        let mut in_band = 0;
        let trials = 200u64;
        for i in 0..trials {
            let jack = sample_stream(&dist, StopRule::Count(gen_len), seed::child(0xbcc, i)).unwrap();
            let m = buffer_count(&jack, n, rho1).unwrap() as f64;
            if m >= lo && m <= hi {
                in_band += 1;
            }
        }
        let coverage = in_band as f64 / trials as f64;
        assert!(coverage >= 0.9, "coverage {coverage}");
    }

    #[test]
    fn delay_matches_prediction() {
        let dist = IpdDistribution::exponential(1.0).unwrap();
        let n = 10_000usize;
        let rho1 = 0.005;
        let mut ratio_sum = 0.0;
        let trials = 20u64;
        for i in 0..trials {
            let jack = sample_stream(&dist, StopRule::Count(n), seed::child(0xde1a, i)).unwrap();
            let observed = phase1_mean_delay(&jack, n, rho1).unwrap();
            ratio_sum += observed / predicted_phase1_mean_delay(rho1, n, 1.0);
        }
        let ratio = ratio_sum / trials as f64;
        assert!((ratio - 1.0).abs() < 0.05, "delay ratio {ratio}");
    }
}
