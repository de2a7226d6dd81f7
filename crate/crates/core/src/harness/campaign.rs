use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rows::{format_rows, parse_rows, write_atomic};
use super::{run_scenario_with_trace, scenario_hash, HarnessError, MeasureRow, ScenarioResult, OFFERED_LOAD};
use crate::scenario::{Architecture, Profile, Scenario};
use crate::stats::{compute_ecr, min_tx_curve, Direction, EcrInput, EcrReport, MeasureSpec, MeasureTable, RateGrid, ReliabilityRule, Tolerance, VarianceModel};

/// How long each cell runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimTimePolicy {
    /// Every cell uses the template's `sim_time`.
    #[default]
    Fixed,
    /// The post-warmup span is stretched to at least `user_seconds` divided
    /// by the cell's user count, so sparse populations still collect enough
    /// sessions per run. Never shorter than the template.
    PerUser { user_seconds: f64 },
}

fn default_floor_ratio() -> f64 {
    1000.0
}

fn default_alpha() -> f64 {
    0.05
}

fn default_measures() -> Vec<MeasureSpec> {
    vec![
        MeasureSpec::new("page_delay", Tolerance::relative(0.1, Direction::LowerIsBetter)),
        MeasureSpec::new("dfr", Tolerance::relative(0.1, Direction::HigherIsBetter)),
    ]
}

fn default_reliability() -> Option<ReliabilityRule> {
    Some(ReliabilityRule::default())
}

/// A sweep over users per ONU, with the reference architecture at every
/// grid rate and the hybrid PON at every transmitter count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignPlan {
    /// Base scenario when `template` is absent.
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub template: Option<Scenario>,
    pub users_per_onu: Vec<usize>,
    pub n_tx: Vec<usize>,
    #[serde(default)]
    pub tuning_time: f64,
    /// Defaults to the decade ladder below R1.
    #[serde(default)]
    pub grid: Option<RateGrid>,
    #[serde(default = "default_floor_ratio")]
    pub grid_floor_ratio: f64,
    #[serde(default)]
    pub sim_time_policy: SimTimePolicy,
    #[serde(default = "default_measures")]
    pub measures: Vec<MeasureSpec>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub variance: VarianceModel,
    #[serde(default = "default_reliability")]
    pub reliability: Option<ReliabilityRule>,
    /// Rates for the minimum-transmitter curves; empty means R1 only.
    #[serde(default)]
    pub r_targets: Vec<f64>,
}

impl CampaignPlan {
    pub fn new(profile: Profile, users_per_onu: Vec<usize>, n_tx: Vec<usize>) -> Self {
        CampaignPlan {
            profile,
            template: None,
            users_per_onu,
            n_tx,
            tuning_time: 0.0,
            grid: None,
            grid_floor_ratio: default_floor_ratio(),
            sim_time_policy: SimTimePolicy::Fixed,
            measures: default_measures(),
            alpha: default_alpha(),
            variance: VarianceModel::Welch,
            reliability: default_reliability(),
            r_targets: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn base(&self) -> Scenario {
        self.template.clone().unwrap_or_else(|| Scenario::profile(self.profile))
    }

    pub fn grid(&self) -> Result<RateGrid, HarnessError> {
        match &self.grid {
            Some(g) => Ok(g.clone()),
            None => RateGrid::decade_ladder(self.base().r1(), self.grid_floor_ratio).map_err(|e| HarnessError::Plan(e.to_string())),
        }
    }

    pub fn r_targets(&self) -> Vec<f64> {
        if self.r_targets.is_empty() {
            vec![self.base().r1()]
        } else {
            self.r_targets.clone()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let plan_err = |m: &str| Err(HarnessError::Plan(m.to_string()));
        let base = self.base();
        base.validate()?;
        if self.users_per_onu.contains(&0) || self.n_tx.contains(&0) {
            return plan_err("users_per_onu and n_tx entries must be positive");
        }
        let grid = self.grid()?;
        if (grid.r1() - base.r1()).abs() > 1e-9 * base.r1() {
            return plan_err("grid must start at R1 = min(r_f, r_d)");
        }
        if self.measures.is_empty() {
            return plan_err("at least one measure is required");
        }
        if let SimTimePolicy::PerUser { user_seconds } = self.sim_time_policy {
            if !(user_seconds.is_finite() && user_seconds > 0.0) {
                return plan_err("user_seconds must be positive");
            }
        }
        for s in self.cells() {
            s.validate()?;
        }
        Ok(())
    }

    fn cell(&self, base: &Scenario, n: usize, architecture: Architecture) -> Scenario {
        let mut s = Scenario { users_per_onu: n, architecture, ..base.clone() };
        if let SimTimePolicy::PerUser { user_seconds } = self.sim_time_policy {
            let measured = (s.sim_time - s.warmup).max((user_seconds / s.n_users() as f64).ceil());
            s.sim_time = s.warmup + measured;
        }
        s
    }

    /// Every cell in deterministic order: per population, the reference
    /// grid from R1 down, then the transmitter counts as listed.
    pub fn cells(&self) -> Vec<Scenario> {
        let base = self.base();
        let Ok(grid) = self.grid() else { return Vec::new() };
        let mut out = Vec::new();
        for &n in &self.users_per_onu {
            for &r in grid.rates() {
                out.push(self.cell(&base, n, Architecture::Reference { line_rate: r }));
            }
            for &k in &self.n_tx {
                out.push(self.cell(&base, n, Architecture::HybridPon { n_tx: k, tuning_time: self.tuning_time }));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignPoint {
    pub n: usize,
    pub n_tx: usize,
    pub config_id: String,
    /// Mean offered load of the candidate runs, relative to R1 per ONU.
    pub load: Option<f64>,
    pub report: Option<EcrReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinTxPoint {
    pub n: usize,
    pub r_target: f64,
    /// `None` when no swept transmitter count reaches the target.
    pub min_ntx: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub r1: f64,
    pub r_grid: Vec<f64>,
    pub alpha: f64,
    pub variance: VarianceModel,
    pub measures: Vec<MeasureSpec>,
    pub points: Vec<CampaignPoint>,
    pub min_tx: Vec<MinTxPoint>,
}

fn tables(rows: &[MeasureRow]) -> BTreeMap<&str, MeasureTable> {
    let mut by_seed: BTreeMap<&str, BTreeMap<String, BTreeMap<u64, f64>>> = BTreeMap::new();
    for r in rows {
        by_seed.entry(&r.config_id).or_default().entry(r.measure_id.clone()).or_default().insert(r.run_seed, r.value);
    }
    by_seed.into_iter().map(|(c, m)| (c, m.into_iter().map(|(id, v)| (id, v.into_values().collect())).collect())).collect()
}

/// Stats stage only: ECR reports and minimum-transmitter curves from rows.
pub fn analyze(plan: &CampaignPlan, rows: &[MeasureRow]) -> Result<CampaignReport, HarnessError> {
    let base = plan.base();
    let grid = plan.grid()?;
    let tables = tables(rows);
    let empty = MeasureTable::new();
    let mut points = Vec::new();
    let mut reports = BTreeMap::new();
    for &n in &plan.users_per_onu {
        let ref_ids: Vec<(f64, String)> = grid.rates().iter().map(|&r| (r, plan.cell(&base, n, Architecture::Reference { line_rate: r }).config_id())).collect();
        let refs: Vec<(f64, &str, &MeasureTable)> = ref_ids.iter().filter_map(|(r, id)| tables.get(id.as_str()).map(|t| (*r, id.as_str(), t))).collect();
        for &k in &plan.n_tx {
            let id = plan.cell(&base, n, Architecture::HybridPon { n_tx: k, tuning_time: plan.tuning_time }).config_id();
            let cand = tables.get(id.as_str()).unwrap_or(&empty);
            let load = cand.get(OFFERED_LOAD).filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64);
            let res = compute_ecr(&EcrInput {
                candidate_id: &id,
                candidate: cand,
                references: &refs,
                grid: &grid,
                measures: &plan.measures,
                alpha: plan.alpha,
                variance: plan.variance,
                reliability: plan.reliability.as_ref(),
            });
            let (report, error) = match res {
                Ok(r) => {
                    reports.insert((k as u32, n as u32), r.clone());
                    (Some(r), None)
                }
                Err(e) => (None, Some(e.to_string())),
            };
            points.push(CampaignPoint { n, n_tx: k, config_id: id, load, report, error });
        }
    }
    let mut min_tx = Vec::new();
    for r_target in plan.r_targets() {
        let curve = min_tx_curve(&reports, r_target);
        for &n in &plan.users_per_onu {
            let min_ntx = curve.get(&(n as u32)).copied().flatten().map(|k| k as usize);
            min_tx.push(MinTxPoint { n, r_target, min_ntx });
        }
    }
    Ok(CampaignReport { r1: grid.r1(), r_grid: grid.rates().to_vec(), alpha: plan.alpha, variance: plan.variance, measures: plan.measures.clone(), points, min_tx })
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub report: CampaignReport,
    pub rows: Vec<MeasureRow>,
    /// Config ids of cells that ran in this invocation.
    pub executed: Vec<String>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

/// Runs every cell not already cached under `out/cells`, merges rows in cell
/// order into `out/measures.csv`, and writes `ecr_report.json` plus the plot
/// files. Cells with a failed replication are not cached.
pub fn run_campaign(plan: &CampaignPlan, out: &Path) -> Result<CampaignOutcome, HarnessError> {
    plan.validate()?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    let cells = plan.cells();
    let cell_dir = out.join("cells");
    std::fs::create_dir_all(&cell_dir).map_err(io(&cell_dir))?;
    let trace = plan.base().build_trace()?;

    let mut cached: Vec<Option<Vec<MeasureRow>>> = Vec::with_capacity(cells.len());
    for s in &cells {
        let path = cell_dir.join(format!("{}.csv", scenario_hash(s)));
        cached.push(match std::fs::read_to_string(&path) {
            Ok(text) => Some(parse_rows(&text)?),
            Err(_) => None,
        });
    }
    let todo: Vec<usize> = (0..cells.len()).filter(|&i| cached[i].is_none()).collect();
    log::info!("{} cells, {} cached, {} to run", cells.len(), cells.len() - todo.len(), todo.len());
    let fresh: Vec<(usize, Result<ScenarioResult, HarnessError>)> = todo
        .par_iter()
        .map(|&i| {
            let s = &cells[i];
            let r = run_scenario_with_trace(s, trace.clone());
            let written = if r.failures.is_empty() {
                let hash = scenario_hash(s);
                write_atomic(&cell_dir.join(format!("{hash}.json")), &s.to_canonical_json())
                    .and_then(|_| write_atomic(&cell_dir.join(format!("{hash}.csv")), &format_rows(&r.rows)))
                    .map_err(io(&cell_dir))
            } else {
                Ok(())
            };
            log::info!("{} done", s.config_id());
            (i, written.map(|_| r))
        })
        .collect();
    let mut fresh: BTreeMap<usize, ScenarioResult> = fresh.into_iter().map(|(i, r)| r.map(|r| (i, r))).collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut executed = Vec::new();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    for (i, s) in cells.iter().enumerate() {
        if let Some(r) = cached[i].take() {
            rows.extend(r);
            continue;
        }
        let r = fresh.remove(&i).unwrap_or_default();
        executed.push(s.config_id());
        warnings.extend(r.warnings);
        failures.extend(r.failures);
        rows.extend(r.rows);
    }

    let measures_path = out.join("measures.csv");
    write_atomic(&measures_path, &format_rows(&rows)).map_err(io(&measures_path))?;
    let report = analyze(plan, &rows)?;
    let report_path = out.join("ecr_report.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_atomic(&report_path, &(json + "\n")).map_err(io(&report_path))?;
    super::emit_plot_data(&report, out).map_err(io(out))?;
    Ok(CampaignOutcome { report, rows, executed, failures, warnings })
}
