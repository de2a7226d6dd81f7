//! Samplers for the fitted session-level distributions.
//!
//! Base variates come from `rand_distr`; this module adds validated parameter
//! blocks, upper truncation by resampling, and a `Constant` variant used to
//! freeze draws in tests and what-if runs.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, LogNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

/// Upper bound on resampling attempts for a truncated draw.
pub const MAX_TRUNCATION_RETRIES: u32 = 1_000_000;

/// Truncated lognormal parameter sets whose acceptance probability falls
/// below this are rejected at validation time.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("{0} must be finite")]
    NotFinite(&'static str),
    #[error("{0} must be positive, got {1}")]
    NotPositive(&'static str, f64),
    #[error("uniform bounds require a <= b, got a={a}, b={b}")]
    BadUniform { a: f64, b: f64 },
    #[error("truncation at max={max} keeps only {acceptance:e} of the lognormal mass")]
    DegenerateTruncation { max: f64, acceptance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncLognormalParams {
    pub mu: f64,
    pub sigma: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LognormalParams {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaParams {
    pub kappa: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialParams {
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformParams {
    pub a: f64,
    pub b: f64,
}

fn finite(name: &'static str, v: f64) -> Result<(), ParamError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ParamError::NotFinite(name))
    }
}

fn positive(name: &'static str, v: f64) -> Result<(), ParamError> {
    finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(ParamError::NotPositive(name, v))
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

impl TruncLognormalParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        finite("mu", self.mu)?;
        positive("sigma", self.sigma)?;
        positive("max", self.max)?;
        let acceptance = self.acceptance();
        if acceptance < MIN_ACCEPTANCE {
            return Err(ParamError::DegenerateTruncation { max: self.max, acceptance });
        }
        Ok(())
    }

    /// P(X <= max) for the untruncated lognormal.
    pub fn acceptance(&self) -> f64 {
        std_normal_cdf((self.max.ln() - self.mu) / self.sigma)
    }

    /// Mean of the truncated distribution.
    pub fn mean(&self) -> f64 {
        let z = (self.max.ln() - self.mu) / self.sigma;
        (self.mu + 0.5 * self.sigma * self.sigma).exp() * std_normal_cdf(z - self.sigma) / std_normal_cdf(z)
    }
}

impl LognormalParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        finite("mu", self.mu)?;
        positive("sigma", self.sigma)
    }

    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.sigma * self.sigma).exp()
    }
}

impl GammaParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        positive("kappa", self.kappa)?;
        positive("theta", self.theta)
    }

    pub fn mean(&self) -> f64 {
        self.kappa * self.theta
    }

    pub fn variance(&self) -> f64 {
        self.kappa * self.theta * self.theta
    }
}

impl ExponentialParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        positive("lambda", self.lambda)
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.lambda
    }
}

impl UniformParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        finite("a", self.a)?;
        finite("b", self.b)?;
        if self.a <= self.b {
            Ok(())
        } else {
            Err(ParamError::BadUniform { a: self.a, b: self.b })
        }
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
}

pub fn sample_trunc_lognormal<R: Rng + ?Sized>(p: &TruncLognormalParams, rng: &mut R) -> Result<f64, ParamError> {
    p.validate()?;
    let base = LogNormal::new(p.mu, p.sigma).map_err(|_| ParamError::NotPositive("sigma", p.sigma))?;
    Ok(draw_truncated(&base, p.max, rng))
}

pub fn sample_lognormal<R: Rng + ?Sized>(p: &LognormalParams, rng: &mut R) -> Result<f64, ParamError> {
    p.validate()?;
    Ok(LogNormal::new(p.mu, p.sigma).map_err(|_| ParamError::NotPositive("sigma", p.sigma))?.sample(rng))
}

pub fn sample_gamma<R: Rng + ?Sized>(p: &GammaParams, rng: &mut R) -> Result<f64, ParamError> {
    p.validate()?;
    Ok(Gamma::new(p.kappa, p.theta).map_err(|_| ParamError::NotPositive("kappa", p.kappa))?.sample(rng))
}

pub fn sample_exponential<R: Rng + ?Sized>(p: &ExponentialParams, rng: &mut R) -> Result<f64, ParamError> {
    p.validate()?;
    Ok(Exp::new(p.lambda).map_err(|_| ParamError::NotPositive("lambda", p.lambda))?.sample(rng))
}

pub fn sample_uniform<R: Rng + ?Sized>(p: &UniformParams, rng: &mut R) -> Result<f64, ParamError> {
    p.validate()?;
    Ok(uniform_draw(p.a, p.b, rng))
}

fn uniform_draw<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a == b {
        a
    } else {
        // [a, b]; the clamp guards the last-ulp rounding of a + u (b - a)
        (a + rng.random::<f64>() * (b - a)).clamp(a, b)
    }
}

fn draw_truncated<R: Rng + ?Sized>(base: &LogNormal<f64>, max: f64, rng: &mut R) -> f64 {
    for _ in 0..MAX_TRUNCATION_RETRIES {
        let x = base.sample(rng);
        if x <= max {
            return x;
        }
    }
    panic!("truncated lognormal rejected {MAX_TRUNCATION_RETRIES} consecutive draws (max={max})");
}

/// A distribution as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dist {
    TruncLognormal(TruncLognormalParams),
    Lognormal(LognormalParams),
    Gamma(GammaParams),
    Exponential(ExponentialParams),
    Uniform(UniformParams),
    Constant { value: f64 },
}

impl Dist {
    pub fn validate(&self) -> Result<(), ParamError> {
        match self {
            Dist::TruncLognormal(p) => p.validate(),
            Dist::Lognormal(p) => p.validate(),
            Dist::Gamma(p) => p.validate(),
            Dist::Exponential(p) => p.validate(),
            Dist::Uniform(p) => p.validate(),
            Dist::Constant { value } => finite("value", *value),
        }
    }

    /// Analytic mean.
    pub fn mean(&self) -> f64 {
        match self {
            Dist::TruncLognormal(p) => p.mean(),
            Dist::Lognormal(p) => p.mean(),
            Dist::Gamma(p) => p.mean(),
            Dist::Exponential(p) => p.mean(),
            Dist::Uniform(p) => p.mean(),
            Dist::Constant { value } => *value,
        }
    }

    pub fn sampler(&self) -> Result<Sampler, ParamError> {
        self.validate()?;
        Ok(match *self {
            Dist::TruncLognormal(p) => Sampler::TruncLognormal {
                base: LogNormal::new(p.mu, p.sigma).expect("validated"),
                max: p.max,
            },
            Dist::Lognormal(p) => Sampler::Lognormal(LogNormal::new(p.mu, p.sigma).expect("validated")),
            Dist::Gamma(p) => Sampler::Gamma(Gamma::new(p.kappa, p.theta).expect("validated")),
            Dist::Exponential(p) => Sampler::Exponential(Exp::new(p.lambda).expect("validated")),
            Dist::Uniform(p) => Sampler::Uniform { a: p.a, b: p.b },
            Dist::Constant { value } => Sampler::Constant(value),
        })
    }
}

/// A validated, ready-to-draw distribution.
#[derive(Debug, Clone)]
pub enum Sampler {
    TruncLognormal { base: LogNormal<f64>, max: f64 },
    Lognormal(LogNormal<f64>),
    Gamma(Gamma<f64>),
    Exponential(Exp<f64>),
    Uniform { a: f64, b: f64 },
    Constant(f64),
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::TruncLognormal { base, max } => draw_truncated(base, *max, rng),
            Sampler::Lognormal(d) => d.sample(rng),
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::Exponential(d) => d.sample(rng),
            Sampler::Uniform { a, b } => uniform_draw(*a, *b, rng),
            Sampler::Constant(v) => *v,
        }
    }
}

/// Rounds a non-negative real half-up to an integer count.
pub fn round_half_up(x: f64) -> u64 {
    if x <= 0.0 {
        0
    } else {
        (x + 0.5).floor() as u64
    }
}
