//! Relative entropies of the timing laws and the covertness lower bound.

use serde::Serialize;

use super::quad::{self, Quadrature};
use crate::error::{Error, Result};
use crate::renewal::IpdDistribution;

/// How a KL value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlMethod {
    ClosedForm,
    Quadrature,
}

/// A relative entropy in nats with its numerical error estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KlResult {
    /// Nonnegative value in nats.
    pub value: f64,
    pub method: KlMethod,
    /// Estimated numerical error in nats (0 for closed forms).
    pub error: f64,
}

impl KlResult {
    /// Clamps values within `1e-12` of zero up to zero; anything more
    /// negative signals a quadrature failure.
    fn checked(value: f64, method: KlMethod, error: f64) -> Result<KlResult> {
        if value < -1e-12 {
            return Err(Error::QuadratureFailure(format!(
                "relative entropy evaluated to {value}"
            )));
        }
        Ok(KlResult {
            value: value.max(0.0),
            method,
            error,
        })
    }
}

/// Relative entropy between the packet counts of two Poisson processes,
/// plus the quadratic upper bound used in the covertness budget.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PoissonCountKl {
    pub kl: KlResult,
    /// `delta^2 T / (2 lambda)`, an upper bound on `kl.value` since
    /// `ln(1+x) >= x - x^2/2` for `x >= 0`.
    pub quadratic_bound: f64,
}

/// KL divergence between the number of arrivals in `[0, T]` of a
/// Poisson(`lambda`) process and a Poisson(`lambda + delta`) process:
/// `delta*T - lambda*T*ln(1 + delta/lambda)`.
pub fn kl_poisson_counts(lambda: f64, delta: f64, t: f64) -> Result<PoissonCountKl> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "T must be positive, got {t}"
        )));
    }
    let value = delta * t - lambda * t * (delta / lambda).ln_1p();
    Ok(PoissonCountKl {
        kl: KlResult::checked(value, KlMethod::ClosedForm, 0.0)?,
        quadratic_bound: delta * delta * t / (2.0 * lambda),
    })
}

/// Exact `D(p || p_scaled)` for the exponential family.
///
/// With `p = lambda exp(-lambda x)` and the slowed density
/// `(1-rho) p((1-rho) x)`, the log ratio is `-ln(1-rho) - lambda rho x`,
/// whose mean under `p` is `-ln(1-rho) - rho`, independent of the rate.
pub fn kl_scaled_exponential_closed_form(rho: f64) -> f64 {
    -(1.0 - rho).ln() - rho
}

/// Numerical `D(p(x) || (1-rho) p((1-rho) x))` for the scaled IPD density.
pub fn kl_scaled_renewal_quadrature(dist: &IpdDistribution, rho: f64) -> Result<KlResult> {
    validate_rho(rho)?;
    dist.validate()?;
    let shrink = 1.0 - rho;
    let log_shrink = shrink.ln();
    let integrand = move |x: f64| {
        let lp = dist.ln_density(x);
        let lq = dist.ln_density(shrink * x) + log_shrink;
        let p = lp.exp();
        if p == 0.0 {
            0.0
        } else {
            p * (lp - lq)
        }
    };
    let Quadrature { value, error } = quad::integrate_to_inf(integrand, 0.0, 1e-12)?;
    KlResult::checked(value, KlMethod::Quadrature, error)
}

/// `D(p || p_scaled)` for a scaling slowdown `rho` in `(0, 1)`.
///
/// Quadrature everywhere; for the exponential family the closed form is
/// also evaluated, cross-checked against the quadrature, and returned with
/// the observed discrepancy as the error estimate.
pub fn kl_scaled_renewal(dist: &IpdDistribution, rho: f64) -> Result<KlResult> {
    let quad_result = kl_scaled_renewal_quadrature(dist, rho)?;
    if let IpdDistribution::Exponential { .. } = dist {
        let closed = kl_scaled_exponential_closed_form(rho);
        let discrepancy = (closed - quad_result.value).abs();
        if discrepancy > 1e-8 + 1e-6 * closed.abs() {
            return Err(Error::QuadratureFailure(format!(
                "scaled-exponential KL quadrature {} disagrees with closed form {}",
                quad_result.value, closed
            )));
        }
        return KlResult::checked(closed, KlMethod::ClosedForm, discrepancy);
    }
    Ok(quad_result)
}

fn validate_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "rho must lie in (0, 1), got {rho}"
        )))
    }
}

/// Lower bound on the warden's best `P_FA + P_MD` from the relative entropy
/// of the two observation laws: `max(0, 1 - sqrt(kl/2))`.
pub fn covertness_lower_bound(kl: f64) -> Result<f64> {
    if !(kl.is_finite() && kl >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "relative entropy must be nonnegative, got {kl}"
        )));
    }
    Ok((1.0 - (kl / 2.0).sqrt()).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn poisson_kl_zero_delta() {
        let r = kl_poisson_counts(1.0, 0.0, 100.0).unwrap();
        assert_eq!(r.kl.value, 0.0);
        assert_eq!(r.quadratic_bound, 0.0);
    }

    #[test]
    fn poisson_kl_closed_form_value() {
        // 1 - 100 ln(1.01), evaluated independently with mpmath to 17
        // significant digits.
        let r = kl_poisson_counts(1.0, 0.01, 100.0).unwrap();
        let expected = 4.966_914_683_191_715e-3;
        assert_relative_eq!(r.kl.value, expected, max_relative = 1e-12);
        assert!(r.kl.value <= r.quadratic_bound);
        assert_relative_eq!(r.quadratic_bound, 5.0e-3, max_relative = 1e-12);
    }

    #[test]
    fn poisson_kl_bound_holds_on_random_grid() {
        let mut rng = seed::rng(0xb0b);
        for _ in 0..1000 {
            let lambda = rng.random_range(0.01..50.0);
            let delta = rng.random_range(0.0..10.0);
            let t = rng.random_range(0.1..1e5);
            let r = kl_poisson_counts(lambda, delta, t).unwrap();
            assert!(r.kl.value >= 0.0);
            assert!(
                r.kl.value <= r.quadratic_bound * (1.0 + 1e-12) + 1e-300,
                "kl {} above bound {} at ({lambda}, {delta}, {t})",
                r.kl.value,
                r.quadratic_bound
            );
            if delta == 0.0 {
                assert_eq!(r.kl.value, 0.0);
            } else {
                assert!(r.kl.value > 0.0);
            }
        }
    }

    #[test]
    fn poisson_kl_rejects_bad_params() {
        assert!(kl_poisson_counts(0.0, 0.1, 1.0).is_err());
        assert!(kl_poisson_counts(1.0, -0.1, 1.0).is_err());
        assert!(kl_poisson_counts(1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn scaled_kl_vanishes_at_tiny_rho() {
        for dist in [
            IpdDistribution::exponential(1.0).unwrap(),
            IpdDistribution::gamma(2.0, 0.5).unwrap(),
            IpdDistribution::weibull(2.0, 1.0).unwrap(),
        ] {
            let r = kl_scaled_renewal(&dist, 1e-6).unwrap();
            assert!(r.value < 1e-11, "{}: {}", dist.family(), r.value);
        }
    }

    #[test]
    fn scaled_kl_exponential_matches_quadrature() {
        for &rho in &[0.3, 0.1, 0.01, 1e-3] {
            let d = IpdDistribution::exponential(2.5).unwrap();
            let closed = kl_scaled_exponential_closed_form(rho);
            let q = kl_scaled_renewal_quadrature(&d, rho).unwrap();
            assert_relative_eq!(closed, q.value, max_relative = 1e-6, epsilon = 1e-11);
            let dispatched = kl_scaled_renewal(&d, rho).unwrap();
            assert_eq!(dispatched.method, KlMethod::ClosedForm);
            assert_relative_eq!(dispatched.value, closed);
        }
    }

    #[test]
    fn scaled_kl_second_order_ratio_near_one() {
        // c = 1 for the exponential family; quadrature against the
        // second-order expansion c rho^2 / 2.
        let d = IpdDistribution::exponential(1.0).unwrap();
        let rho = 0.01;
        let r = kl_scaled_renewal_quadrature(&d, rho).unwrap();
        let ratio = r.value / (0.5 * rho * rho);
        assert!((0.98..=1.02).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn scaled_kl_ratio_sweeps_toward_one() {
        let cases = [
            (IpdDistribution::exponential(1.0).unwrap(), 1.0),
            (IpdDistribution::gamma(2.0, 0.5).unwrap(), 2.0),
            (IpdDistribution::weibull(2.0, 1.0).unwrap(), 4.0),
        ];
        for (dist, c) in cases {
            let mut prev_gap = f64::INFINITY;
            let mut rho = 0.02;
            while rho >= 0.0025 - 1e-12 {
                let r = kl_scaled_renewal(&dist, rho).unwrap();
                let ratio = r.value / (0.5 * c * rho * rho);
                let gap = (ratio - 1.0).abs();
                assert!(
                    gap <= prev_gap + 1e-9,
                    "{}: |ratio-1| grew from {prev_gap} to {gap} at rho={rho}",
                    dist.family()
                );
                prev_gap = gap;
                rho /= 2.0;
            }
            assert!(prev_gap < 0.02, "{}: final gap {prev_gap}", dist.family());
        }
    }

    #[test]
    fn scaled_kl_rejects_bad_rho() {
        let d = IpdDistribution::exponential(1.0).unwrap();
        assert!(kl_scaled_renewal(&d, 0.0).is_err());
        assert!(kl_scaled_renewal(&d, 1.0).is_err());
        assert!(kl_scaled_renewal(&d, -0.1).is_err());
    }

    #[test]
    fn lower_bound_basics() {
        assert_eq!(covertness_lower_bound(0.0).unwrap(), 1.0);
        assert_relative_eq!(covertness_lower_bound(0.02).unwrap(), 0.9);
        assert_eq!(covertness_lower_bound(8.0).unwrap(), 0.0);
        assert!(covertness_lower_bound(-0.5).is_err());
    }

    #[test]
    fn lower_bound_monotone() {
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let kl = i as f64 * 0.02;
            let b = covertness_lower_bound(kl).unwrap();
            assert!(b <= prev);
            assert!((0.0..=1.0).contains(&b));
            prev = b;
        }
    }
}
