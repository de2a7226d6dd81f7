//! Session-level sources and sinks and the records they produce.

pub mod trace;
pub mod video;
pub mod web;

use serde::{Deserialize, Serialize};

use crate::kernel::SimTime;

pub use trace::{convert_verbose_trace, load_trace, parse_trace, synthetic_trace, Frame, FrameTrace, FrameType, TraceError};
pub use video::{gop_decodable, gop_dfr, DfrSink, GopOutcome, VideoSource};
pub use web::{Fetch, FilePlan, FtpModel, FtpParams, HttpModel, HttpParams, PagePlan, MAX_EMBEDDED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionKind {
    Page,
    File,
    VideoGop,
}

/// One completed observation: page delay in seconds, file transfer rate in
/// b/s, or the decodable fraction of one GoP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SessionRecord {
    pub kind: SessionKind,
    pub user: usize,
    pub start: SimTime,
    pub end: SimTime,
    pub value: f64,
}

/// Sessions per end user; fixed for a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UserNode {
    pub n_h: usize,
    pub n_f: usize,
    pub n_v: usize,
}

impl Default for UserNode {
    fn default() -> Self {
        UserNode { n_h: 1, n_f: 10, n_v: 1 }
    }
}
