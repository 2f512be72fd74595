//! The Fisher scaling constant of an IPD family.
//!
//! For a density `p` on the positive reals, the constant
//!
//! ```text
//! c = -1 + integral of p(x) * x^2 * (d log p(x) / dx)^2 over (0, inf)
//! ```
//!
//! is the Fisher information of the scaling perturbation
//! `(1-rho) p((1-rho) x)` at `rho = 0`; it governs the second-order growth
//! `c rho^2 / 2` of the relative entropy between the original and slowed
//! timing laws.

use super::quad::{self, Quadrature};
use crate::error::{Error, Result};
use crate::renewal::IpdDistribution;

/// Closed-form value of the scaling Fisher constant.
///
/// Writing `x * dlogp(x)` for each family and taking moments:
/// exponential gives 1; gamma and erlang give the shape `k`; weibull gives
/// `k^2`; rayleigh (weibull with shape 2) gives 4; chi-squared with `v`
/// degrees of freedom is gamma with shape `v/2`; the generalized gamma
/// family with density proportional to `x^(d-1) exp(-(x/a)^p)` gives
/// `p * d`, which reduces to all of the above.
pub fn fisher_constant_analytic(dist: &IpdDistribution) -> f64 {
    match *dist {
        IpdDistribution::Exponential { .. } => 1.0,
        IpdDistribution::Gamma { shape, .. } => shape,
        IpdDistribution::Weibull { shape, .. } => shape * shape,
        IpdDistribution::Rayleigh { .. } => 4.0,
        IpdDistribution::Erlang { shape, .. } => shape as f64,
        IpdDistribution::ChiSquared { dof } => dof / 2.0,
        IpdDistribution::GeneralizedGamma { shape, power, .. } => power * shape,
    }
}

/// The Fisher constant by adaptive quadrature of the defining integral.
pub fn fisher_constant_quadrature(dist: &IpdDistribution, tol: f64) -> Result<Quadrature> {
    dist.validate()?;
    let integrand = move |x: f64| {
        let s = x * dist.dlog_density(x);
        dist.density(x) * s * s
    };
    let q = quad::integrate_to_inf(integrand, 0.0, tol)?;
    Ok(Quadrature {
        value: q.value - 1.0,
        error: q.error,
    })
}

/// The Fisher constant `c` of an IPD family.
///
/// The closed form is cross-checked against the defining integral; the two
/// routes must agree within `1e-6` and the result must be positive.
pub fn fisher_constant_c(dist: &IpdDistribution) -> Result<f64> {
    dist.validate()?;
    let analytic = fisher_constant_analytic(dist);
    let quadrature = fisher_constant_quadrature(dist, 1e-9)?;
    let diff = (analytic - quadrature.value).abs();
    if diff > 1e-6 * analytic.abs().max(1.0) {
        return Err(Error::QuadratureFailure(format!(
            "fisher constant mismatch for {}: closed form {analytic}, quadrature {}",
            dist.family(),
            quadrature.value
        )));
    }
    if analytic <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "fisher constant must be positive, got {analytic}"
        )));
    }
    Ok(analytic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    #[test]
    fn exponential_is_one() {
        for rate in [0.2, 1.0, 7.5] {
            let d = IpdDistribution::exponential(rate).unwrap();
            assert_eq!(fisher_constant_c(&d).unwrap(), 1.0);
        }
    }

    #[test]
    fn gamma_shape_three() {
        let d = IpdDistribution::gamma(3.0, 1.7).unwrap();
        assert_eq!(fisher_constant_c(&d).unwrap(), 3.0);
    }

    #[test]
    fn quadrature_agrees_at_two_refinements() {
        // Weibull shape 2: two independent mesh tolerances as the oracle.
        let d = IpdDistribution::weibull(2.0, 1.0).unwrap();
        let coarse = fisher_constant_quadrature(&d, 1e-7).unwrap();
        let fine = fisher_constant_quadrature(&d, 1e-11).unwrap();
        assert!((coarse.value - fine.value).abs() < 1e-6);
        assert!((fine.value - 4.0).abs() < 1e-6);
    }

    #[test]
    fn quadrature_matches_closed_forms_across_families() {
        let dists = [
            IpdDistribution::exponential(3.0).unwrap(),
            IpdDistribution::gamma(2.0, 0.5).unwrap(),
            IpdDistribution::weibull(1.5, 2.0).unwrap(),
            IpdDistribution::rayleigh(0.6).unwrap(),
            IpdDistribution::erlang(4, 0.25).unwrap(),
            IpdDistribution::chi_squared(1.0).unwrap(),
            IpdDistribution::chi_squared(5.0).unwrap(),
            IpdDistribution::generalized_gamma(1.2, 2.5, 1.4).unwrap(),
        ];
        for d in &dists {
            let a = fisher_constant_analytic(d);
            let q = fisher_constant_quadrature(d, 1e-9).unwrap();
            assert!(
                (a - q.value).abs() < 1e-6 * a.max(1.0),
                "{}: analytic {a}, quadrature {}",
                d.family(),
                q.value
            );
            assert!(fisher_constant_c(d).is_ok());
        }
    }

    #[test]
    fn scale_invariance() {
        // The integrand is invariant under x -> a x, so c does not depend
        // on the scale parameter; checked over random scales.
        let mut rng = seed::rng(0xf15e);
        for _ in 0..20 {
            let scale: f64 = rng.random_range(0.05..20.0);
            let pairs = [
                (
                    IpdDistribution::exponential(1.0).unwrap(),
                    IpdDistribution::exponential(1.0 / scale).unwrap(),
                ),
                (
                    IpdDistribution::gamma(2.5, 1.0).unwrap(),
                    IpdDistribution::gamma(2.5, scale).unwrap(),
                ),
                (
                    IpdDistribution::weibull(1.8, 1.0).unwrap(),
                    IpdDistribution::weibull(1.8, scale).unwrap(),
                ),
            ];
            for (base, scaled) in pairs {
                assert_eq!(
                    fisher_constant_c(&base).unwrap(),
                    fisher_constant_c(&scaled).unwrap()
                );
                let qb = fisher_constant_quadrature(&base, 1e-9).unwrap();
                let qs = fisher_constant_quadrature(&scaled, 1e-9).unwrap();
                assert!((qb.value - qs.value).abs() < 1e-7);
            }
        }
    }
}
