//! Non-inferiority testing and the equivalent circuit rate.
//!
//! Inputs are per-run means, one value per independent replication, so every
//! sample is treated as i.i.d. and roughly normal.

mod ecr;
mod noninferiority;

use thiserror::Error;

pub use ecr::{compute_ecr, min_tx_curve, EcrInput, EcrReport, EcrValue, GridVerdict, MeasureSpec, MeasureTable, RateGrid, ReliabilityRule};
pub use noninferiority::{
    iut_combine, noninferiority_test, t_quantile, Direction, MeasureSample, NonInferiorityResult, Tolerance, ToleranceMode, VarianceModel, VARIANCE_FLOOR,
};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("{measure_id} for {config_id} has {n} values, need at least 2")]
    TooFewValues { config_id: String, measure_id: String, n: usize },
    #[error("{measure_id} for {config_id} contains a non-finite value")]
    NonFinite { config_id: String, measure_id: String },
    #[error("alpha must be in (0, 0.5), got {0}")]
    BadAlpha(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("invalid rate grid: {0}")]
    BadGrid(String),
    #[error("no reference results at rate {rate}")]
    MissingReference { rate: f64 },
    #[error("{config_id} has no values for {measure_id}")]
    MissingMeasure { config_id: String, measure_id: String },
    #[error("at least one measure is required")]
    NoMeasures,
}
