use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use super::campaign::CampaignReport;
use super::rows::write_atomic;
use crate::stats::EcrValue;

pub const ECR_PLOT_FILE: &str = "ecr_vs_n.csv";
pub const MIN_TX_PLOT_FILE: &str = "min_ntx_vs_n.csv";

/// ECR against users per ONU, one row per (n, n_tx) with a report.
pub fn ecr_plot_csv(report: &CampaignReport) -> String {
    let mut s = String::new();
    s.push_str("# ecr in b/s against users per ONU for each transmitter count\n");
    s.push_str("# flag 0: ecr is the largest passing grid rate\n");
    s.push_str("# flag 1: passes at the top grid rate; ecr = R1 and the true value may be higher\n");
    s.push_str("# flag 2: fails at every grid rate; ecr = 0\n");
    s.push_str("# reliable 0: candidate saturated, excluded from trend checks\n");
    s.push_str("# load: offered downstream bits per ONU over R1, empty when unknown\n");
    s.push_str("n,n_tx,ecr,flag,reliable,load\n");
    for p in &report.points {
        let Some(r) = &p.report else { continue };
        let (ecr, flag) = match r.ecr {
            EcrValue::Rate { rate } => (rate, 0),
            EcrValue::AtLeastR1 { r1 } => (r1, 1),
            EcrValue::BelowGrid { .. } => (0.0, 2),
        };
        let load = p.load.map(|l| format!("{l:.6}")).unwrap_or_default();
        writeln!(s, "{},{},{},{},{},{}", p.n, p.n_tx, ecr, flag, u8::from(!r.flagged), load).expect("string write");
    }
    s
}

/// Minimum transmitter count against users per ONU for each target rate.
pub fn min_tx_plot_csv(report: &CampaignReport) -> String {
    let mut s = String::new();
    s.push_str("# smallest swept transmitter count whose ecr reaches r_target (b/s)\n");
    s.push_str("# min_ntx 0: no swept count reaches the target\n");
    s.push_str("n,r_target,min_ntx\n");
    for p in &report.min_tx {
        writeln!(s, "{},{},{}", p.n, p.r_target, p.min_ntx.unwrap_or(0)).expect("string write");
    }
    s
}

/// Writes both figure files into `dir` and returns their paths.
pub fn emit_plot_data(report: &CampaignReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    let a = dir.join(ECR_PLOT_FILE);
    let b = dir.join(MIN_TX_PLOT_FILE);
    write_atomic(&a, &ecr_plot_csv(report))?;
    write_atomic(&b, &min_tx_plot_csv(report))?;
    Ok(vec![a, b])
}
