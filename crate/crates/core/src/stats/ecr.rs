use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::noninferiority::{iut_combine, noninferiority_test, MeasureSample, NonInferiorityResult, Tolerance, VarianceModel};
use super::StatsError;

/// Strictly descending ladder of candidate reference rates, first entry R1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RateGrid(Vec<f64>);

impl RateGrid {
    pub fn new(rates: Vec<f64>) -> Result<Self, StatsError> {
        if rates.is_empty() {
            return Err(StatsError::BadGrid("empty grid".into()));
        }
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(StatsError::BadGrid("rates must be positive and finite".into()));
        }
        if rates.windows(2).any(|w| w[1] >= w[0]) {
            return Err(StatsError::BadGrid("rates must be strictly descending".into()));
        }
        Ok(RateGrid(rates))
    }

    /// `{1, 1/2, 1/4, 1/10} * r1`, repeated per decade down to `r1 / floor_ratio`.
    pub fn decade_ladder(r1: f64, floor_ratio: f64) -> Result<Self, StatsError> {
        if !(r1.is_finite() && r1 > 0.0 && floor_ratio >= 1.0) {
            return Err(StatsError::BadGrid(format!("r1 {r1}, floor ratio {floor_ratio}")));
        }
        let mut rates = Vec::new();
        let mut k = 0;
        'outer: loop {
            let decade = 10f64.powi(k);
            for step in [1.0, 0.5, 0.25] {
                if decade / step > floor_ratio * (1.0 + 1e-9) {
                    break 'outer;
                }
                // divide by the exact power of ten so decimal rates stay exact
                rates.push(r1 * step / decade);
            }
            k += 1;
        }
        RateGrid::new(rates)
    }

    pub fn r1(&self) -> f64 {
        self.0[0]
    }

    pub fn rates(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for RateGrid {
    type Error = StatsError;
    fn try_from(v: Vec<f64>) -> Result<Self, StatsError> {
        RateGrid::new(v)
    }
}

impl From<RateGrid> for Vec<f64> {
    fn from(g: RateGrid) -> Vec<f64> {
        g.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EcrValue {
    /// Non-inferior to the R1 reference; the grid cannot resolve anything higher.
    AtLeastR1 { r1: f64 },
    Rate { rate: f64 },
    /// Not non-inferior even to the slowest reference on the grid.
    BelowGrid { floor: f64 },
}

impl EcrValue {
    /// Lower bound on the equivalent rate, 0 when below the grid.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            EcrValue::AtLeastR1 { r1 } => r1,
            EcrValue::Rate { rate } => rate,
            EcrValue::BelowGrid { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub id: String,
    pub tolerance: Tolerance,
}

impl MeasureSpec {
    pub fn new(id: impl Into<String>, tolerance: Tolerance) -> Self {
        MeasureSpec { id: id.into(), tolerance }
    }
}

/// Flags a configuration whose `measure` mean exceeds `factor` times the
/// mean of the R1 reference at the same population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilityRule {
    pub measure: String,
    pub factor: f64,
}

impl Default for ReliabilityRule {
    fn default() -> Self {
        ReliabilityRule { measure: "page_delay".into(), factor: 10.0 }
    }
}

/// Per-measure run means of one configuration.
pub type MeasureTable = BTreeMap<String, Vec<f64>>;

#[derive(Debug, Clone)]
pub struct EcrInput<'a> {
    pub candidate_id: &'a str,
    pub candidate: &'a MeasureTable,
    /// Reference tables keyed by the grid rate they were run at.
    pub references: &'a [(f64, &'a str, &'a MeasureTable)],
    pub grid: &'a RateGrid,
    pub measures: &'a [MeasureSpec],
    pub alpha: f64,
    pub variance: VarianceModel,
    pub reliability: Option<&'a ReliabilityRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridVerdict {
    pub rate: f64,
    pub reference_id: String,
    pub non_inferior: bool,
    pub tests: Vec<NonInferiorityResult>,
    /// Reference at this rate is itself saturated under the reliability rule.
    pub reference_saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcrReport {
    pub candidate_id: String,
    pub r_grid: Vec<f64>,
    pub verdicts: Vec<GridVerdict>,
    pub ecr: EcrValue,
    pub flagged: bool,
    pub flags: Vec<String>,
}

fn sample<'t>(table: &'t MeasureTable, config_id: &str, measure: &str) -> Result<&'t Vec<f64>, StatsError> {
    table.get(measure).ok_or_else(|| StatsError::MissingMeasure { config_id: config_id.into(), measure_id: measure.into() })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Walks the grid from R1 downward; the ECR is the first (largest) rate at
/// which every listed measure passes its non-inferiority test.
pub fn compute_ecr(input: &EcrInput<'_>) -> Result<EcrReport, StatsError> {
    if input.measures.is_empty() {
        return Err(StatsError::NoMeasures);
    }
    let mut verdicts = Vec::with_capacity(input.grid.rates().len());
    for &rate in input.grid.rates() {
        let (_, ref_id, table) = input
            .references
            .iter()
            .find(|(r, _, _)| rate_eq(*r, rate))
            .ok_or(StatsError::MissingReference { rate })?;
        let mut tests = Vec::with_capacity(input.measures.len());
        for m in input.measures {
            let c = MeasureSample::new(&m.id, input.candidate_id, sample(input.candidate, input.candidate_id, &m.id)?.clone());
            let r = MeasureSample::new(&m.id, *ref_id, sample(table, ref_id, &m.id)?.clone());
            tests.push(noninferiority_test(&c, &r, &m.tolerance, input.alpha, input.variance)?);
        }
        verdicts.push(GridVerdict {
            rate,
            reference_id: ref_id.to_string(),
            non_inferior: iut_combine(&tests),
            tests,
            reference_saturated: false,
        });
    }

    let mut flags = Vec::new();
    let mut flagged = false;
    if let Some(rule) = input.reliability {
        let (_, r1_id, r1_table) = input.references.iter().find(|(r, _, _)| rate_eq(*r, input.grid.r1())).ok_or(StatsError::MissingReference { rate: input.grid.r1() })?;
        let baseline = mean(sample(r1_table, r1_id, &rule.measure)?);
        let limit = rule.factor * baseline;
        let cand = mean(sample(input.candidate, input.candidate_id, &rule.measure)?);
        if cand > limit {
            flagged = true;
            flags.push(format!("{} mean {cand:.4} exceeds {}x the R1 reference ({baseline:.4})", rule.measure, rule.factor));
        }
        for v in &mut verdicts {
            let (_, id, table) = input.references.iter().find(|(r, _, _)| rate_eq(*r, v.rate)).expect("checked above");
            if mean(sample(table, id, &rule.measure)?) > limit {
                v.reference_saturated = true;
            }
        }
    }

    let ecr = match verdicts.iter().position(|v| v.non_inferior) {
        Some(0) => EcrValue::AtLeastR1 { r1: input.grid.r1() },
        Some(i) => EcrValue::Rate { rate: verdicts[i].rate },
        None => EcrValue::BelowGrid { floor: *input.grid.rates().last().expect("non-empty") },
    };
    Ok(EcrReport {
        candidate_id: input.candidate_id.to_string(),
        r_grid: input.grid.rates().to_vec(),
        verdicts,
        ecr,
        flagged,
        flags,
    })
}

fn rate_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Smallest transmitter count per population whose ECR reaches `r_target`.
/// Flagged points never qualify; populations with no qualifying count map to
/// `None`.
pub fn min_tx_curve(reports: &BTreeMap<(u32, u32), EcrReport>, r_target: f64) -> BTreeMap<u32, Option<u32>> {
    let mut out: BTreeMap<u32, Option<u32>> = BTreeMap::new();
    for (&(n_tx, n), rep) in reports {
        let entry = out.entry(n).or_insert(None);
        let ok = !rep.flagged && rep.ecr.lower_bound() >= r_target * (1.0 - 1e-9);
        if ok && entry.is_none_or(|cur| n_tx < cur) {
            *entry = Some(n_tx);
        }
    }
    out
}
