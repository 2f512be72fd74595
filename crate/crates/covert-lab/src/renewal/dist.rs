//! Parametric inter-packet-delay laws on the positive reals.
//!
//! Every family here has support exactly `(0, inf)`, a strictly positive
//! density, and finite mean and variance. The set matches the scaled-density
//! regularity class used by the buffering analysis: the generalized gamma
//! distribution and its special cases. Families are stored as their own
//! variants rather than reduced to generalized gamma so each keeps its exact
//! sampler and closed-form moments.

use rand::Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// A parametric IPD law on `(0, inf)`.
///
/// The generalized gamma variant uses the parameterization with density
/// proportional to `x^(shape-1) * exp(-(x/scale)^power)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IpdDistribution {
    /// Exponential with rate `rate`; mean `1/rate`.
    Exponential { rate: f64 },
    /// Gamma with shape `shape` and scale `scale`; mean `shape * scale`.
    Gamma { shape: f64, scale: f64 },
    /// Weibull with shape `shape` and scale `scale`.
    Weibull { shape: f64, scale: f64 },
    /// Rayleigh with scale `sigma`; mean `sigma * sqrt(pi/2)`.
    Rayleigh { sigma: f64 },
    /// Erlang: gamma with integer shape.
    Erlang { shape: u64, scale: f64 },
    /// Chi-squared with `dof` degrees of freedom.
    ChiSquared { dof: f64 },
    /// Density proportional to `x^(shape-1) * exp(-(x/scale)^power)`.
    GeneralizedGamma { scale: f64, shape: f64, power: f64 },
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

impl IpdDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = IpdDistribution::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        let d = IpdDistribution::Gamma { shape, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        let d = IpdDistribution::Weibull { shape, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn rayleigh(sigma: f64) -> Result<Self> {
        let d = IpdDistribution::Rayleigh { sigma };
        d.validate()?;
        Ok(d)
    }

    pub fn erlang(shape: u64, scale: f64) -> Result<Self> {
        let d = IpdDistribution::Erlang { shape, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn chi_squared(dof: f64) -> Result<Self> {
        let d = IpdDistribution::ChiSquared { dof };
        d.validate()?;
        Ok(d)
    }

    pub fn generalized_gamma(scale: f64, shape: f64, power: f64) -> Result<Self> {
        let d = IpdDistribution::GeneralizedGamma { scale, shape, power };
        d.validate()?;
        Ok(d)
    }

    /// Checks parameter ranges; deserialized values must pass through here.
    pub fn validate(&self) -> Result<()> {
        match *self {
            IpdDistribution::Exponential { rate } => require_positive("rate", rate),
            IpdDistribution::Gamma { shape, scale } => {
                require_positive("shape", shape)?;
                require_positive("scale", scale)
            }
            IpdDistribution::Weibull { shape, scale } => {
                require_positive("shape", shape)?;
                require_positive("scale", scale)
            }
            IpdDistribution::Rayleigh { sigma } => require_positive("sigma", sigma),
            IpdDistribution::Erlang { shape, scale } => {
                if shape == 0 {
                    return Err(Error::InvalidDistribution(
                        "erlang shape must be a positive integer".into(),
                    ));
                }
                require_positive("scale", scale)
            }
            IpdDistribution::ChiSquared { dof } => require_positive("dof", dof),
            IpdDistribution::GeneralizedGamma { scale, shape, power } => {
                require_positive("scale", scale)?;
                require_positive("shape", shape)?;
                require_positive("power", power)
            }
        }
    }

    /// Short family tag used in CSV output and reports.
    pub fn family(&self) -> &'static str {
        match self {
            IpdDistribution::Exponential { .. } => "exponential",
            IpdDistribution::Gamma { .. } => "gamma",
            IpdDistribution::Weibull { .. } => "weibull",
            IpdDistribution::Rayleigh { .. } => "rayleigh",
            IpdDistribution::Erlang { .. } => "erlang",
            IpdDistribution::ChiSquared { .. } => "chi-squared",
            IpdDistribution::GeneralizedGamma { .. } => "generalized-gamma",
        }
    }

    /// Mean IPD in seconds.
    pub fn mean(&self) -> f64 {
        match *self {
            IpdDistribution::Exponential { rate } => 1.0 / rate,
            IpdDistribution::Gamma { shape, scale } => shape * scale,
            IpdDistribution::Weibull { shape, scale } => {
                scale * (ln_gamma(1.0 + 1.0 / shape)).exp()
            }
            IpdDistribution::Rayleigh { sigma } => sigma * (std::f64::consts::PI / 2.0).sqrt(),
            IpdDistribution::Erlang { shape, scale } => shape as f64 * scale,
            IpdDistribution::ChiSquared { dof } => dof,
            IpdDistribution::GeneralizedGamma { scale, shape, power } => {
                scale * gamma_ratio((shape + 1.0) / power, shape / power)
            }
        }
    }

    /// Second raw moment `E[X^2]`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            IpdDistribution::Exponential { rate } => 2.0 / (rate * rate),
            IpdDistribution::Gamma { shape, scale } => shape * (shape + 1.0) * scale * scale,
            IpdDistribution::Weibull { shape, scale } => {
                scale * scale * (ln_gamma(1.0 + 2.0 / shape)).exp()
            }
            IpdDistribution::Rayleigh { sigma } => 2.0 * sigma * sigma,
            IpdDistribution::Erlang { shape, scale } => {
                let k = shape as f64;
                k * (k + 1.0) * scale * scale
            }
            IpdDistribution::ChiSquared { dof } => dof * (dof + 2.0),
            IpdDistribution::GeneralizedGamma { scale, shape, power } => {
                scale * scale * gamma_ratio((shape + 2.0) / power, shape / power)
            }
        }
    }

    /// Variance of the IPD in seconds squared.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }

    /// Packet rate `lambda = 1 / mean` in packets per second.
    pub fn rate(&self) -> f64 {
        1.0 / self.mean()
    }

    /// Density `p(x)`; zero for `x <= 0`.
    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.ln_density(x).exp()
    }

    /// Natural log of the density, valid for `x > 0`.
    pub fn ln_density(&self, x: f64) -> f64 {
        debug_assert!(x > 0.0);
        match *self {
            IpdDistribution::Exponential { rate } => rate.ln() - rate * x,
            IpdDistribution::Gamma { shape, scale } => {
                (shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()
            }
            IpdDistribution::Weibull { shape, scale } => {
                shape.ln() - scale.ln() + (shape - 1.0) * (x.ln() - scale.ln())
                    - (x / scale).powf(shape)
            }
            IpdDistribution::Rayleigh { sigma } => {
                x.ln() - 2.0 * sigma.ln() - x * x / (2.0 * sigma * sigma)
            }
            IpdDistribution::Erlang { shape, scale } => {
                let k = shape as f64;
                (k - 1.0) * x.ln() - x / scale - ln_gamma(k) - k * scale.ln()
            }
            IpdDistribution::ChiSquared { dof } => {
                let h = dof / 2.0;
                (h - 1.0) * x.ln() - x / 2.0 - h * std::f64::consts::LN_2 - ln_gamma(h)
            }
            IpdDistribution::GeneralizedGamma { scale, shape, power } => {
                power.ln() + (shape - 1.0) * x.ln()
                    - shape * scale.ln()
                    - (x / scale).powf(power)
                    - ln_gamma(shape / power)
            }
        }
    }

    /// Derivative of the log-density, `d log p(x) / dx`, for `x > 0`.
    pub fn dlog_density(&self, x: f64) -> f64 {
        debug_assert!(x > 0.0);
        match *self {
            IpdDistribution::Exponential { rate } => -rate,
            IpdDistribution::Gamma { shape, scale } => (shape - 1.0) / x - 1.0 / scale,
            IpdDistribution::Weibull { shape, scale } => {
                (shape - 1.0) / x - (shape / scale) * (x / scale).powf(shape - 1.0)
            }
            IpdDistribution::Rayleigh { sigma } => 1.0 / x - x / (sigma * sigma),
            IpdDistribution::Erlang { shape, scale } => (shape as f64 - 1.0) / x - 1.0 / scale,
            IpdDistribution::ChiSquared { dof } => (dof / 2.0 - 1.0) / x - 0.5,
            IpdDistribution::GeneralizedGamma { scale, shape, power } => {
                (shape - 1.0) / x - (power / scale) * (x / scale).powf(power - 1.0)
            }
        }
    }

    /// Prepares a reusable sampler for this law.
    pub fn sampler(&self) -> Result<IpdSampler> {
        let inner = match *self {
            IpdDistribution::Exponential { rate } => {
                Sampler::Exp(rand_distr::Exp::new(rate).map_err(invalid)?)
            }
            IpdDistribution::Gamma { shape, scale } => {
                Sampler::Gamma(rand_distr::Gamma::new(shape, scale).map_err(invalid)?)
            }
            IpdDistribution::Weibull { shape, scale } => {
                Sampler::Weibull(rand_distr::Weibull::new(scale, shape).map_err(invalid)?)
            }
            IpdDistribution::Rayleigh { sigma } => {
                // Rayleigh(sigma) == Weibull(shape 2, scale sigma*sqrt(2)).
                let scale = sigma * std::f64::consts::SQRT_2;
                Sampler::Weibull(rand_distr::Weibull::new(scale, 2.0).map_err(invalid)?)
            }
            IpdDistribution::Erlang { shape, scale } => {
                Sampler::Gamma(rand_distr::Gamma::new(shape as f64, scale).map_err(invalid)?)
            }
            IpdDistribution::ChiSquared { dof } => {
                Sampler::ChiSquared(rand_distr::ChiSquared::new(dof).map_err(invalid)?)
            }
            IpdDistribution::GeneralizedGamma { scale, shape, power } => {
                // If G ~ Gamma(shape/power, 1), then scale * G^(1/power) has
                // the generalized gamma law.
                Sampler::GenGamma {
                    base: rand_distr::Gamma::new(shape / power, 1.0).map_err(invalid)?,
                    scale,
                    inv_power: 1.0 / power,
                }
            }
        };
        Ok(IpdSampler { inner })
    }
}

fn invalid<E: std::fmt::Display>(e: E) -> Error {
    Error::InvalidDistribution(e.to_string())
}

/// `Gamma(a) / Gamma(b)` computed in log space.
fn gamma_ratio(a: f64, b: f64) -> f64 {
    (ln_gamma(a) - ln_gamma(b)).exp()
}

#[derive(Debug, Clone)]
enum Sampler {
    Exp(rand_distr::Exp<f64>),
    Gamma(rand_distr::Gamma<f64>),
    Weibull(rand_distr::Weibull<f64>),
    ChiSquared(rand_distr::ChiSquared<f64>),
    GenGamma {
        base: rand_distr::Gamma<f64>,
        scale: f64,
        inv_power: f64,
    },
}

/// Reusable sampler; draws are strictly positive.
#[derive(Debug, Clone)]
pub struct IpdSampler {
    inner: Sampler,
}

impl IpdSampler {
    /// Draws one IPD. Zero draws (possible at f64 resolution) are rejected
    /// so partial sums stay strictly increasing.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = match &self.inner {
                Sampler::Exp(d) => d.sample(rng),
                Sampler::Gamma(d) => d.sample(rng),
                Sampler::Weibull(d) => d.sample(rng),
                Sampler::ChiSquared(d) => d.sample(rng),
                Sampler::GenGamma {
                    base,
                    scale,
                    inv_power,
                } => scale * base.sample(rng).powf(*inv_power),
            };
            if x > 0.0 && x.is_finite() {
                return x;
            }
        }
    }
}
