use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const MEASURES_HEADER: &str = "config_id,measure_id,run_seed,value";

/// One per-run sample mean: a line of `measures.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub config_id: String,
    pub measure_id: String,
    pub run_seed: u64,
    pub value: f64,
}

/// Header plus one line per row; values use the shortest text that
/// round-trips, so equal inputs give equal bytes.
pub fn format_rows(rows: &[MeasureRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(MEASURES_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{},{},{},{}", r.config_id, r.measure_id, r.run_seed, r.value).expect("string write");
    }
    out
}

pub fn parse_rows(text: &str) -> Result<Vec<MeasureRow>, HarnessError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line == MEASURES_HEADER) {
            continue;
        }
        let bad = |msg: &str| HarnessError::Csv { line: i + 1, msg: msg.to_string() };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let run_seed = f[2].parse().map_err(|_| bad("run_seed is not an unsigned integer"))?;
        let value: f64 = f[3].parse().map_err(|_| bad("value is not a number"))?;
        rows.push(MeasureRow { config_id: f[0].to_string(), measure_id: f[1].to_string(), run_seed, value });
    }
    Ok(rows)
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{}.tmp", path.file_name().and_then(|n| n.to_str()).unwrap_or("out")));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}
