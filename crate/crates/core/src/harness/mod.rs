//! Replication and campaign orchestration: runs scenarios, extracts per-run
//! measure rows, feeds them to the ECR analysis and writes report files.

mod campaign;
mod plot;
mod rows;

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::scenario::{ConfigError, Scenario};
use crate::testbed::{run_once, MeasureId, RunOptions};
use crate::traffic::FrameTrace;

pub use campaign::{analyze, run_campaign, CampaignOutcome, CampaignPlan, CampaignPoint, CampaignReport, MinTxPoint, SimTimePolicy};
pub use plot::{ecr_plot_csv, emit_plot_data, min_tx_plot_csv, ECR_PLOT_FILE, MIN_TX_PLOT_FILE};
pub use rows::{format_rows, parse_rows, write_atomic, MeasureRow, MEASURES_HEADER};

/// Derived row: offered downstream bits per ONU over the whole run, divided
/// by the top grid rate.
pub const OFFERED_LOAD: &str = "offered_load";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("measures.csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid campaign plan: {0}")]
    Plan(String),
}

/// Rows and diagnostics of one scenario's replications.
#[derive(Debug, Clone, Default)]
pub struct ScenarioResult {
    pub rows: Vec<MeasureRow>,
    pub warnings: Vec<String>,
    /// One message per replication that did not complete.
    pub failures: Vec<String>,
}

/// Hex SHA-256 of the canonical scenario JSON.
pub fn scenario_hash(s: &Scenario) -> String {
    Sha256::digest(s.to_canonical_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn rows_for_run(s: &Scenario, seed: u64, trace: Arc<FrameTrace>, out: &mut ScenarioResult) {
    let config_id = s.config_id();
    match run_once(s, trace, seed, RunOptions::default()) {
        Ok(run) => {
            for m in MeasureId::ALL {
                match run.measure(m).mean() {
                    Some(value) => out.rows.push(MeasureRow { config_id: config_id.clone(), measure_id: m.as_str().into(), run_seed: seed, value }),
                    None => out.warnings.push(format!("{config_id} seed {seed}: no {} samples after warmup", m.as_str())),
                }
            }
            let load = run.network.down_offered_bytes as f64 * 8.0 / (s.sim_time * s.n_onus as f64 * s.r1());
            out.rows.push(MeasureRow { config_id, measure_id: OFFERED_LOAD.into(), run_seed: seed, value: load });
        }
        Err(e) => out.failures.push(format!("{config_id} seed {seed}: {e}")),
    }
}

/// Runs `replications` independent runs with seeds `base_seed + k`, in
/// parallel on the current rayon pool. Row order is seed order whatever the
/// pool size.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioResult, ConfigError> {
    s.validate()?;
    let trace = s.build_trace()?;
    Ok(run_scenario_with_trace(s, trace))
}

pub(crate) fn run_scenario_with_trace(s: &Scenario, trace: Arc<FrameTrace>) -> ScenarioResult {
    let parts: Vec<ScenarioResult> = (0..s.replications as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = ScenarioResult::default();
            rows_for_run(s, s.base_seed + k, trace.clone(), &mut r);
            r
        })
        .collect();
    let mut out = ScenarioResult::default();
    for p in parts {
        out.rows.extend(p.rows);
        out.warnings.extend(p.warnings);
        out.failures.extend(p.failures);
    }
    for w in &out.warnings {
        log::warn!("{w}");
    }
    out
}
