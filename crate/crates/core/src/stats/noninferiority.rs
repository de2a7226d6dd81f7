use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerIsBetter,
    HigherIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceMode {
    /// Fraction of the reference sample mean.
    RelativeToReferenceMean,
    /// Same units as the measure.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    pub mode: ToleranceMode,
    pub value: f64,
    pub direction: Direction,
}

impl Tolerance {
    pub fn relative(value: f64, direction: Direction) -> Self {
        Tolerance { mode: ToleranceMode::RelativeToReferenceMean, value, direction }
    }

    pub fn absolute(value: f64, direction: Direction) -> Self {
        Tolerance { mode: ToleranceMode::Absolute, value, direction }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceModel {
    /// Unequal variances with Welch–Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Pooled variance with n_c + n_r - 2 degrees of freedom.
    Pooled,
}

/// Per-run sample means of one measure under one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSample {
    pub measure_id: String,
    pub config_id: String,
    pub values: Vec<f64>,
}

impl MeasureSample {
    pub fn new(measure_id: impl Into<String>, config_id: impl Into<String>, values: Vec<f64>) -> Self {
        MeasureSample { measure_id: measure_id.into(), config_id: config_id.into(), values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonInferiorityResult {
    pub measure_id: String,
    pub direction: Direction,
    /// Tolerance in the measure's units.
    pub delta: f64,
    pub mean_candidate: f64,
    pub mean_reference: f64,
    /// One-sided confidence bound on mu_C - mu_R: upper when lower is
    /// better, lower when higher is better.
    pub ci_limit: f64,
    pub alpha: f64,
    pub reject_h0: bool,
    pub df: f64,
    /// Statistic for the shifted null; compare with the t quantile.
    pub t_stat: f64,
    pub std_error: f64,
}

/// Summary moments of a sample.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Moments {
    pub n: f64,
    pub mean: f64,
    pub var: f64,
}

pub(crate) fn moments(values: &[f64]) -> Moments {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Moments { n, mean, var: ss / (n - 1.0) }
}

/// Relative floor applied to sample variances when both are zero, so that a
/// verdict on constant samples is still defined.
pub const VARIANCE_FLOOR: f64 = 1e-24;

/// Upper `1 - alpha` quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile(df: f64, alpha: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("df > 0").inverse_cdf(1.0 - alpha)
}

/// One-sided non-inferiority test of `candidate` against `reference`.
///
/// Lower-is-better: H0 is mu_C - mu_R >= delta, rejected when the upper
/// `1 - alpha` confidence bound of the difference is below delta.
/// Higher-is-better: H0 is mu_C - mu_R <= -delta, rejected when the lower
/// bound is above -delta.
pub fn noninferiority_test(
    candidate: &MeasureSample,
    reference: &MeasureSample,
    tol: &Tolerance,
    alpha: f64,
    variance: VarianceModel,
) -> Result<NonInferiorityResult, StatsError> {
    for s in [candidate, reference] {
        if s.values.len() < 2 {
            return Err(StatsError::TooFewValues { config_id: s.config_id.clone(), measure_id: s.measure_id.clone(), n: s.values.len() });
        }
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite { config_id: s.config_id.clone(), measure_id: s.measure_id.clone() });
        }
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(StatsError::BadAlpha(alpha));
    }
    if !(tol.value.is_finite() && tol.value > 0.0) {
        return Err(StatsError::BadTolerance(tol.value));
    }
    let c = moments(&candidate.values);
    let r = moments(&reference.values);
    let delta = match tol.mode {
        ToleranceMode::Absolute => tol.value,
        // a zero reference mean gives delta = 0: only strict superiority passes
        ToleranceMode::RelativeToReferenceMean => tol.value * r.mean.abs(),
    };
    let (mut vc, mut vr) = (c.var, r.var);
    if vc == 0.0 && vr == 0.0 {
        let scale = c.mean.abs().max(r.mean.abs()).max(delta);
        let floor = if scale > 0.0 { VARIANCE_FLOOR * scale * scale } else { VARIANCE_FLOOR };
        vc = floor;
        vr = floor;
    }
    let (se, df) = match variance {
        VarianceModel::Welch => {
            let a = vc / c.n;
            let b = vr / r.n;
            let se2 = a + b;
            let df = se2 * se2 / (a * a / (c.n - 1.0) + b * b / (r.n - 1.0));
            (se2.sqrt(), df)
        }
        VarianceModel::Pooled => {
            let df = c.n + r.n - 2.0;
            let sp2 = ((c.n - 1.0) * vc + (r.n - 1.0) * vr) / df;
            ((sp2 * (1.0 / c.n + 1.0 / r.n)).sqrt(), df)
        }
    };
    let diff = c.mean - r.mean;
    let t = t_quantile(df, alpha);
    let (ci_limit, reject_h0, t_stat) = match tol.direction {
        Direction::LowerIsBetter => {
            let upper = diff + t * se;
            (upper, upper < delta, (diff - delta) / se)
        }
        Direction::HigherIsBetter => {
            let lower = diff - t * se;
            (lower, lower > -delta, (diff + delta) / se)
        }
    };
    Ok(NonInferiorityResult {
        measure_id: candidate.measure_id.clone(),
        direction: tol.direction,
        delta,
        mean_candidate: c.mean,
        mean_reference: r.mean,
        ci_limit,
        alpha,
        reject_h0,
        df,
        t_stat,
        std_error: se,
    })
}

/// Intersection-union combination: the candidate is non-inferior on all
/// measures only if every component test rejects its null. An empty list
/// carries no evidence and yields `false`.
pub fn iut_combine(results: &[NonInferiorityResult]) -> bool {
    !results.is_empty() && results.iter().all(|r| r.reject_h0)
}
