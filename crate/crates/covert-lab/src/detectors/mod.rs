//! The warden's hypothesis tests.
//!
//! H0: the channel carries only Jack's traffic; H1: someone tampered with
//! it (inserted packets or buffered by slowdown). The warden knows the
//! channel law but cannot authenticate packet sources, so every test here
//! consumes timings only.

mod estimate;

pub use estimate::{estimate_error_sum, TrialEstimate};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::renewal::{count_arrivals, PacketStream};

/// Outcome of a binary hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    /// No tampering.
    H0,
    /// Insertion or buffering detected.
    H1,
}

/// Which detector produced a report, fixing the rejection direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    /// H1 when the packet count exceeds the threshold.
    CountThreshold,
    /// H1 when the mean IPD exceeds the threshold (slowdown inflates IPDs).
    MeanIpdBuffering,
    /// H1 when the mean IPD falls below the threshold (insertion packs more
    /// packets into the same span).
    MeanIpdInsertion,
}

/// Rejection direction of the mean-IPD statistic.
///
/// The same statistic serves two converses with opposite rejection
/// regions, so the direction is an explicit parameter: `Buffering` flags an
/// inflated mean IPD, `Insertion` flags a deflated one (the latter keeps
/// the threshold `1/lambda + U` of the quoted decision rule, whose
/// false-alarm side is not Chebyshev-controlled).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanIpdMode {
    Buffering,
    Insertion,
}

/// One detector decision with the statistic and threshold behind it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DetectionReport {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Hypothesis,
    /// Target false-alarm bound the threshold was derived from.
    pub alpha: f64,
    pub detector: DetectorKind,
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Count-threshold detector for the Poisson channel.
///
/// Counts the packets `S` in `[0, T]` and decides H1 iff
/// `S > lambda T + U` with `U = sqrt(lambda T / alpha)`. Under H0 the count
/// is Poisson(`lambda T`), so Chebyshev gives `P_FA <= lambda T / U^2 =
/// alpha` (conservatively).
pub fn count_threshold_detect(
    stream: &PacketStream,
    lambda: f64,
    t: f64,
    alpha: f64,
) -> Result<DetectionReport> {
    validate_alpha(alpha)?;
    if !(lambda.is_finite() && lambda > 0.0) || !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need positive lambda and T, got {lambda}, {t}"
        )));
    }
    let statistic = count_arrivals(stream, t)? as f64;
    let threshold = lambda * t + (lambda * t / alpha).sqrt();
    Ok(DetectionReport {
        statistic,
        threshold,
        decision: if statistic > threshold {
            Hypothesis::H1
        } else {
            Hypothesis::H0
        },
        alpha,
        detector: DetectorKind::CountThreshold,
    })
}

/// Mean-IPD detector for renewal channels.
///
/// Computes the average observed IPD `S` over `n` packets and compares it
/// to `1/lambda + U` with `U = sqrt(sigma2 / (alpha n))`; `sigma2` is the
/// channel law's IPD variance, known to the warden, not estimated from the
/// data. In `Buffering` mode `P_FA <= sigma2 / (n U^2) = alpha` by
/// Chebyshev.
pub fn mean_ipd_detect(
    ipds: &[f64],
    lambda: f64,
    sigma2: f64,
    alpha: f64,
    mode: MeanIpdMode,
) -> Result<DetectionReport> {
    validate_alpha(alpha)?;
    if ipds.is_empty() {
        return Err(Error::EmptyStream);
    }
    if !(lambda.is_finite() && lambda > 0.0) || !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need positive lambda and sigma2, got {lambda}, {sigma2}"
        )));
    }
    let n = ipds.len() as f64;
    let statistic = ipds.iter().sum::<f64>() / n;
    let threshold = 1.0 / lambda + (sigma2 / (alpha * n)).sqrt();
    let (decision, detector) = match mode {
        MeanIpdMode::Buffering => (
            if statistic > threshold {
                Hypothesis::H1
            } else {
                Hypothesis::H0
            },
            DetectorKind::MeanIpdBuffering,
        ),
        MeanIpdMode::Insertion => (
            if statistic < threshold {
                Hypothesis::H1
            } else {
                Hypothesis::H0
            },
            DetectorKind::MeanIpdInsertion,
        ),
    };
    Ok(DetectionReport {
        statistic,
        threshold,
        decision,
        alpha,
        detector,
    })
}

/// Likelihood ratio of the two Poisson count laws at an observed count.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LrtReport {
    /// `log Lambda(n) = -delta T + n ln(1 + delta/lambda)`.
    pub log_ratio: f64,
    /// `Lambda(n)`; may overflow to infinity for extreme counts, the
    /// decision is always taken in log space.
    pub ratio: f64,
    /// H1 iff `Lambda(n) > 1`; the deterministic tie rule decides H0 at
    /// exactly 1 (equal priors, minimizing the error sum).
    pub decision: Hypothesis,
}

/// Optimal count test for Poisson(`lambda`) vs Poisson(`lambda + delta`)
/// over `[0, T]`, evaluated at unit threshold.
///
/// The count is a sufficient statistic for these two hypotheses, so this is
/// the test that minimizes `P_FA + P_MD` at equal priors.
pub fn poisson_count_lrt(n: usize, lambda: f64, delta: f64, t: f64) -> Result<LrtReport> {
    if !(lambda.is_finite() && lambda > 0.0)
        || !(delta.is_finite() && delta >= 0.0)
        || !(t.is_finite() && t > 0.0)
    {
        return Err(Error::InvalidParameter(format!(
            "need lambda > 0, delta >= 0, T > 0; got {lambda}, {delta}, {t}"
        )));
    }
    let log_ratio = -delta * t + n as f64 * (delta / lambda).ln_1p();
    Ok(LrtReport {
        log_ratio,
        ratio: log_ratio.exp(),
        decision: if log_ratio > 0.0 {
            Hypothesis::H1
        } else {
            Hypothesis::H0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{extract_ipds, sample_stream, scale_stream, IpdDistribution, StopRule};
    use crate::seed;
    use approx::assert_relative_eq;

    #[test]
    fn count_threshold_formula() {
        // lambda=1, T=100, alpha=0.04: U=50, threshold 150.
        let times: Vec<f64> = (1..=120).map(|i| i as f64 * 0.5).collect();
        let s = PacketStream::from_times(&times, crate::renewal::Source::Jack, Some(100.0)).unwrap();
        let r = count_threshold_detect(&s, 1.0, 100.0, 0.04).unwrap();
        assert_relative_eq!(r.threshold, 150.0);
        assert_eq!(r.statistic, 120.0);
        assert_eq!(r.decision, Hypothesis::H0);

        let times: Vec<f64> = (1..=151).map(|i| i as f64 * 0.6).collect();
        let s = PacketStream::from_times(&times, crate::renewal::Source::Jack, Some(100.0)).unwrap();
        let r = count_threshold_detect(&s, 1.0, 100.0, 0.04).unwrap();
        assert_eq!(r.statistic, 151.0);
        assert_eq!(r.decision, Hypothesis::H1);
    }

    #[test]
    fn count_threshold_false_alarm_under_h0() {
        let d = IpdDistribution::exponential(1.0).unwrap();
        let mut alarms = 0;
        let trials = 10_000u64;
        for i in 0..trials {
            let s = sample_stream(&d, StopRule::Horizon(100.0), seed::child(0xfa, i)).unwrap();
            let r = count_threshold_detect(&s, 1.0, 100.0, 0.04).unwrap();
            if r.decision == Hypothesis::H1 {
                alarms += 1;
            }
        }
        let p_fa = alarms as f64 / trials as f64;
        assert!(p_fa <= 0.04, "P_FA {p_fa} above Chebyshev bound");
    }

    #[test]
    fn count_threshold_alpha_grid_respects_bound() {
        // Chebyshev guarantee over a small (lambda, T, alpha) grid.
        for (gi, &(lambda, t, alpha)) in [
            (0.5, 200.0, 0.1),
            (2.0, 50.0, 0.02),
            (1.0, 1000.0, 0.05),
        ]
        .iter()
        .enumerate()
        {
            let d = IpdDistribution::exponential(lambda).unwrap();
            let trials = 400u64;
            let mut alarms = 0;
            for i in 0..trials {
                let s = sample_stream(&d, StopRule::Horizon(t), seed::child(0x61 + gi as u64, i))
                    .unwrap();
                if count_threshold_detect(&s, lambda, t, alpha).unwrap().decision == Hypothesis::H1
                {
                    alarms += 1;
                }
            }
            let p_fa = alarms as f64 / trials as f64;
            assert!(p_fa <= alpha, "grid ({lambda},{t},{alpha}): P_FA {p_fa}");
        }
    }

    #[test]
    fn mean_ipd_threshold_formula() {
        // Exponential rate 2: mean 0.5, sigma2 0.25, n=100, alpha=0.25
        // gives U = 0.1.
        let ipds = vec![0.5; 100];
        let r = mean_ipd_detect(&ipds, 2.0, 0.25, 0.25, MeanIpdMode::Buffering).unwrap();
        assert_relative_eq!(r.threshold - 0.5, 0.1, max_relative = 1e-12);
        assert_eq!(r.decision, Hypothesis::H0);
        let r = mean_ipd_detect(&ipds, 2.0, 0.25, 0.25, MeanIpdMode::Insertion).unwrap();
        // 0.5 < 0.6 threshold: the quoted insertion rule fires.
        assert_eq!(r.decision, Hypothesis::H1);
    }

    #[test]
    fn mean_ipd_false_alarm_under_h0() {
        let d = IpdDistribution::exponential(2.0).unwrap();
        let trials = 10_000u64;
        let mut alarms = 0;
        for i in 0..trials {
            let s = sample_stream(&d, StopRule::Count(100), seed::child(0xaa, i)).unwrap();
            let ipds = extract_ipds(&s).unwrap();
            let r = mean_ipd_detect(&ipds, 2.0, 0.25, 0.25, MeanIpdMode::Buffering).unwrap();
            if r.decision == Hypothesis::H1 {
                alarms += 1;
            }
        }
        let p_fa = alarms as f64 / trials as f64;
        assert!(p_fa <= 0.25, "P_FA {p_fa}");
    }

    #[test]
    fn mean_ipd_detects_heavy_buffering() {
        // m = n^0.75 buffered: slowdown factor (n+m)/n inflates the mean
        // IPD well past the threshold; light version of the converse sweep.
        let n = 2000usize;
        let m = (n as f64).powf(0.75);
        let factor = (n as f64 + m) / n as f64;
        let d = IpdDistribution::exponential(1.0).unwrap();
        let trials = 500u64;
        let mut misses = 0;
        for i in 0..trials {
            let s = sample_stream(&d, StopRule::Count(n), seed::child(0x3d, i)).unwrap();
            let slowed = scale_stream(&s, factor).unwrap();
            let ipds = extract_ipds(&slowed).unwrap();
            let r = mean_ipd_detect(&ipds, 1.0, 1.0, 0.05, MeanIpdMode::Buffering).unwrap();
            if r.decision == Hypothesis::H0 {
                misses += 1;
            }
        }
        let p_md = misses as f64 / trials as f64;
        assert!(p_md <= 0.05, "P_MD {p_md}");
    }

    #[test]
    fn mean_ipd_validates_inputs() {
        assert!(mean_ipd_detect(&[], 1.0, 1.0, 0.1, MeanIpdMode::Buffering).is_err());
        assert!(mean_ipd_detect(&[1.0], 1.0, 1.0, 0.0, MeanIpdMode::Buffering).is_err());
        assert!(mean_ipd_detect(&[1.0], 1.0, 1.0, 1.0, MeanIpdMode::Buffering).is_err());
        assert!(mean_ipd_detect(&[1.0], 0.0, 1.0, 0.1, MeanIpdMode::Buffering).is_err());
    }

    #[test]
    fn lrt_identical_hypotheses() {
        for n in [0usize, 5, 1000] {
            let r = poisson_count_lrt(n, 1.0, 0.0, 50.0).unwrap();
            assert_eq!(r.ratio, 1.0);
            // Tie rule: decide H0 at ratio exactly 1.
            assert_eq!(r.decision, Hypothesis::H0);
        }
    }

    #[test]
    fn lrt_closed_form_at_zero_count() {
        let r = poisson_count_lrt(0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(r.ratio, (-1.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(r.ratio, 0.367_879_441_171_442_3, max_relative = 1e-12);
        assert_eq!(r.decision, Hypothesis::H0);
    }

    #[test]
    fn lrt_is_monotone_with_single_cutoff() {
        let (lambda, delta, t) = (1.0f64, 0.3f64, 40.0f64);
        // log Lambda is linear in n, so decisions flip exactly once at
        // n* = delta T / ln(1 + delta/lambda).
        let cutoff = delta * t / (delta / lambda).ln_1p();
        for n in 0..200 {
            let r = poisson_count_lrt(n, lambda, delta, t).unwrap();
            let expected = if (n as f64) > cutoff {
                Hypothesis::H1
            } else {
                Hypothesis::H0
            };
            assert_eq!(r.decision, expected, "n = {n}");
        }
    }
}
