//! Scenario configuration: one simulated configuration plus replication
//! settings, with full-scale defaults and the reduced desk profile.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::net::{BufferPlan, RatePlan};
use crate::traffic::{load_trace, synthetic_trace, FrameTrace, FtpParams, HttpParams, UserNode};
use crate::transport::RenoConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("trace: {0}")]
    Trace(#[from] crate::traffic::TraceError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    /// Dedicated point-to-point line of `line_rate` b/s per ONU.
    Reference { line_rate: f64 },
    /// Hybrid TDM/WDM-PON with `n_tx` tunable OLT transmitters.
    HybridPon {
        n_tx: usize,
        #[serde(default)]
        tuning_time: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraceSource {
    /// Generated trace; `mean_bit_rate` is before `size_scale` is applied.
    Synthetic { pattern: String, frames: usize, mean_bit_rate: f64, seed: u64 },
    /// CSV trace file; sizes are used as stored, then scaled by `size_scale`.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VideoConfig {
    pub trace: TraceSource,
    pub fps: f64,
}

impl Default for VideoConfig {
    fn default() -> Self {
        VideoConfig {
            trace: TraceSource::Synthetic { pattern: "IBBPBBPBBPBB".into(), frames: 14_400, mean_bit_rate: 28.6e6, seed: 0 },
            fps: 24.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficConfig {
    pub users: UserNode,
    pub http: HttpParams,
    pub ftp: FtpParams,
    pub video: VideoConfig,
    /// Multiplies object, file and frame sizes (not request sizes).
    pub size_scale: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig { users: UserNode::default(), http: HttpParams::default(), ftp: FtpParams::default(), video: VideoConfig::default(), size_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub architecture: Architecture,
    pub rate_plan: RatePlan,
    pub buffers: BufferPlan,
    pub n_onus: usize,
    pub users_per_onu: usize,
    pub traffic: TrafficConfig,
    pub transport: RenoConfig,
    /// Seconds of simulated time per run.
    pub sim_time: f64,
    /// Records starting before this many seconds are discarded.
    pub warmup: f64,
    pub replications: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Full-scale rates and three-hour runs.
    Paper,
    /// Rates, buffers and sizes divided by 100; ten-minute runs.
    #[default]
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(format!("unknown profile {other:?} (expected desk or paper)")),
        }
    }
}

/// Divisor applied to rates, buffers and sizes in the desk profile.
pub const DESK_SCALE: f64 = 100.0;

impl Default for Scenario {
    fn default() -> Self {
        let plan = RatePlan::full_scale();
        Scenario {
            architecture: Architecture::Reference { line_rate: plan.r_f.min(plan.r_d) },
            rate_plan: plan,
            buffers: BufferPlan::full_scale(),
            n_onus: 16,
            users_per_onu: 1,
            traffic: TrafficConfig::default(),
            transport: RenoConfig::default(),
            sim_time: 3.0 * 3600.0,
            warmup: 20.0 * 60.0,
            replications: 5,
            base_seed: 1,
        }
    }
}

impl Scenario {
    pub fn profile(p: Profile) -> Self {
        let full = Scenario::default();
        match p {
            Profile::Paper => full,
            Profile::Desk => {
                let plan = full.rate_plan.scaled(DESK_SCALE);
                Scenario {
                    architecture: Architecture::Reference { line_rate: plan.r_f.min(plan.r_d) },
                    rate_plan: plan,
                    buffers: full.buffers.scaled(DESK_SCALE),
                    traffic: TrafficConfig { size_scale: 1.0 / DESK_SCALE, ..full.traffic },
                    sim_time: 600.0,
                    warmup: 60.0,
                    ..full
                }
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let s = Self::from_json(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        s.validate()?;
        Ok(s)
    }

    /// Canonical JSON; the cell cache key is a hash of this text.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn n_users(&self) -> usize {
        self.n_onus * self.users_per_onu
    }

    /// Top of the rate grid: the lesser of feeder and distribution rates,
    /// where a hybrid PON's feeder carries `n_tx` transmitters of `r_d`.
    pub fn r1(&self) -> f64 {
        self.rate_plan.r_f.min(self.rate_plan.r_d)
    }

    pub fn config_id(&self) -> String {
        match self.architecture {
            Architecture::Reference { line_rate } => format!("ref:R={}:n={}", line_rate, self.users_per_onu),
            Architecture::HybridPon { n_tx, .. } => format!("pon:ntx={}:n={}", n_tx, self.users_per_onu),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.rate_plan.validate().map_err(|e| invalid(e.to_string()))?;
        if self.n_onus == 0 || self.users_per_onu == 0 {
            return Err(invalid("n_onus and users_per_onu must be positive"));
        }
        match self.architecture {
            Architecture::Reference { line_rate } => {
                if !(line_rate.is_finite() && line_rate >= 1.0) {
                    return Err(invalid(format!("line_rate must be at least 1 b/s, got {line_rate}")));
                }
            }
            Architecture::HybridPon { n_tx, tuning_time } => {
                if n_tx == 0 || n_tx > self.n_onus {
                    return Err(invalid(format!("n_tx must be in 1..={}, got {n_tx}", self.n_onus)));
                }
                if !(tuning_time.is_finite() && tuning_time >= 0.0) {
                    return Err(invalid("tuning_time must be non-negative"));
                }
            }
        }
        if !(self.sim_time.is_finite() && self.sim_time > 0.0) {
            return Err(invalid("sim_time must be positive"));
        }
        if !(self.warmup.is_finite() && self.warmup >= 0.0 && self.warmup < self.sim_time) {
            return Err(invalid("need 0 <= warmup < sim_time"));
        }
        if self.replications < 2 {
            return Err(invalid("replications must be at least 2"));
        }
        let t = &self.traffic;
        if !(t.size_scale.is_finite() && t.size_scale > 0.0) {
            return Err(invalid("size_scale must be positive"));
        }
        if !(t.video.fps.is_finite() && t.video.fps > 0.0) {
            return Err(invalid("fps must be positive"));
        }
        t.http.validate().map_err(|e| invalid(format!("http: {e}")))?;
        t.ftp.validate().map_err(|e| invalid(format!("ftp: {e}")))?;
        if let TraceSource::Synthetic { pattern, frames, mean_bit_rate, .. } = &t.video.trace {
            if *frames == 0 || !pattern.starts_with('I') || !pattern.chars().all(|c| matches!(c, 'I' | 'P' | 'B')) {
                return Err(invalid("synthetic trace needs frames > 0 and an I/P/B pattern starting with I"));
            }
            if !(mean_bit_rate.is_finite() && *mean_bit_rate > 0.0) {
                return Err(invalid("mean_bit_rate must be positive"));
            }
        }
        self.transport.validate().map_err(|e| invalid(format!("transport: {e}")))?;
        Ok(())
    }

    /// Builds the frame trace with `size_scale` applied.
    pub fn build_trace(&self) -> Result<Arc<FrameTrace>, ConfigError> {
        let t = match &self.traffic.video.trace {
            TraceSource::Synthetic { pattern, frames, mean_bit_rate, seed } => synthetic_trace(pattern, *frames, self.traffic.video.fps, *mean_bit_rate, *seed),
            TraceSource::File { path } => {
                let (t, warnings) = load_trace(path)?;
                for w in warnings {
                    log::warn!("{}: {w}", path.display());
                }
                t
            }
        };
        let scale = self.traffic.size_scale;
        Ok(Arc::new(if scale == 1.0 { t } else { t.scaled(scale) }))
    }
}
