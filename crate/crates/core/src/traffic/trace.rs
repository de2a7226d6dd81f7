use std::fmt::Write as _;
use std::path::Path;

use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::kernel::derive_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameType {
    I,
    P,
    B,
}

impl FrameType {
    pub fn is_reference(self) -> bool {
        !matches!(self, FrameType::B)
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "I" | "i" => Some(FrameType::I),
            "P" | "p" => Some(FrameType::P),
            "B" | "b" => Some(FrameType::B),
            _ => None,
        }
    }

    fn letter(self) -> char {
        match self {
            FrameType::I => 'I',
            FrameType::P => 'P',
            FrameType::B => 'B',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub index: u64,
    pub kind: FrameType,
    pub size: u64,
}

/// Frames in transmission order. `gop_size` is the spacing of I frames and
/// `b_frames` the longest run of consecutive B frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTrace {
    pub frames: Vec<Frame>,
    pub gop_size: usize,
    pub b_frames: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace has no frames")]
    Empty,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("frame {index} has zero size")]
    ZeroSize { index: u64 },
    #[error("trace contains no I frame")]
    NoIntraFrame,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FrameTrace {
    /// Validates frames and infers the GoP shape; irregular GoP spacing is
    /// returned as warnings.
    pub fn new(frames: Vec<Frame>) -> Result<(Self, Vec<String>), TraceError> {
        if frames.is_empty() {
            return Err(TraceError::Empty);
        }
        if let Some(f) = frames.iter().find(|f| f.size == 0) {
            return Err(TraceError::ZeroSize { index: f.index });
        }
        let intra: Vec<usize> = frames.iter().enumerate().filter(|(_, f)| f.kind == FrameType::I).map(|(i, _)| i).collect();
        if intra.is_empty() {
            return Err(TraceError::NoIntraFrame);
        }
        let mut warnings = Vec::new();
        let gop_size = if intra.len() >= 2 { intra[1] - intra[0] } else { frames.len() - intra[0] };
        if intra.windows(2).any(|w| w[1] - w[0] != gop_size) {
            warnings.push(format!("irregular GoP spacing; using {gop_size} from the first GoP"));
        }
        if intra[0] != 0 {
            warnings.push(format!("trace starts with {} frames before the first I frame", intra[0]));
        }
        let mut b_frames = 0;
        let mut run = 0;
        for f in &frames {
            run = if f.kind == FrameType::B { run + 1 } else { 0 };
            b_frames = b_frames.max(run);
        }
        Ok((FrameTrace { frames, gop_size, b_frames }, warnings))
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn mean_frame_size(&self) -> f64 {
        self.frames.iter().map(|f| f.size as f64).sum::<f64>() / self.frames.len() as f64
    }

    /// Mean bit rate at `fps` frames per second.
    pub fn mean_bit_rate(&self, fps: f64) -> f64 {
        8.0 * self.mean_frame_size() * fps
    }

    /// Copy with every size multiplied by `factor`, rounded half-up, at least 1.
    pub fn scaled(&self, factor: f64) -> FrameTrace {
        let frames = self.frames.iter().map(|f| Frame { size: ((f.size as f64 * factor + 0.5).floor() as u64).max(1), ..*f }).collect();
        FrameTrace { frames, ..self.clone() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,frame_type,size_bytes\n");
        for f in &self.frames {
            writeln!(s, "{},{},{}", f.index, f.kind.letter(), f.size).expect("write to string");
        }
        s
    }
}

/// Parses the CSV trace format: `index,frame_type,size_bytes`, optional
/// header, `#` comments and blank lines ignored.
pub fn parse_trace(text: &str) -> Result<(FrameTrace, Vec<String>), TraceError> {
    let mut frames = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if frames.is_empty() && cols.first().is_some_and(|c| c.eq_ignore_ascii_case("index")) {
            continue;
        }
        let bad = |reason: String| TraceError::Parse { line: n + 1, reason };
        if cols.len() != 3 {
            return Err(bad(format!("expected 3 columns, found {}", cols.len())));
        }
        let index = cols[0].parse::<u64>().map_err(|e| bad(format!("index: {e}")))?;
        let kind = FrameType::parse(cols[1]).ok_or_else(|| bad(format!("unknown frame type {:?}", cols[1])))?;
        let size = cols[2].parse::<u64>().map_err(|e| bad(format!("size: {e}")))?;
        frames.push(Frame { index, kind, size });
    }
    FrameTrace::new(frames)
}

pub fn load_trace(path: &Path) -> Result<(FrameTrace, Vec<String>), TraceError> {
    parse_trace(&std::fs::read_to_string(path)?)
}

/// Converts a whitespace-separated verbose trace (frame number, optional
/// timestamp, frame type, size in bytes, then any further columns) to the
/// CSV format. Lines that do not start with a frame number are skipped.
pub fn convert_verbose_trace(text: &str) -> Result<String, TraceError> {
    let mut frames = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let toks: Vec<&str> = line.split_whitespace().collect();
        let Some(index) = toks.first().and_then(|t| t.parse::<u64>().ok()) else {
            continue;
        };
        let bad = |reason: &str| TraceError::Parse { line: n + 1, reason: reason.to_string() };
        let type_at = toks.iter().position(|t| FrameType::parse(t).is_some()).ok_or_else(|| bad("no frame type column"))?;
        let kind = FrameType::parse(toks[type_at]).expect("position matched");
        let size = toks
            .get(type_at + 1)
            .and_then(|t| t.parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s >= 0.0)
            .ok_or_else(|| bad("no size column after the frame type"))?;
        frames.push(Frame { index, kind, size: size.round() as u64 });
    }
    let (trace, _) = FrameTrace::new(frames)?;
    Ok(trace.to_csv())
}

/// Deterministic stand-in for a real encoder trace: repeating `pattern`
/// GoPs with lognormally varying frame sizes, rescaled so the mean bit rate
/// at `fps` is exactly `mean_bit_rate`.
pub fn synthetic_trace(pattern: &str, frames: usize, fps: f64, mean_bit_rate: f64, seed: u64) -> FrameTrace {
    let kinds: Vec<FrameType> = pattern.chars().map(|c| FrameType::parse(&c.to_string()).expect("pattern of I/P/B")).collect();
    assert!(!kinds.is_empty() && kinds[0] == FrameType::I && frames > 0);
    // relative mean sizes of I, P and B pictures
    let weight = |k: FrameType| match k {
        FrameType::I => 4.0,
        FrameType::P => 2.0,
        FrameType::B => 1.0,
    };
    let noise = LogNormal::new(-0.045, 0.3).expect("valid");
    let mut rng = derive_stream("trace/synthetic", seed);
    let raw: Vec<f64> = (0..frames).map(|i| weight(kinds[i % kinds.len()]) * noise.sample(&mut rng)).collect();
    let target_mean = mean_bit_rate / (8.0 * fps);
    let k = target_mean * frames as f64 / raw.iter().sum::<f64>();
    let mut sized: Vec<Frame> = raw
        .iter()
        .enumerate()
        .map(|(i, r)| Frame { index: i as u64, kind: kinds[i % kinds.len()], size: ((r * k).round() as u64).max(1) })
        .collect();
    // absorb rounding so the total is exact
    let want = (target_mean * frames as f64).round() as i64;
    let have: i64 = sized.iter().map(|f| f.size as i64).sum();
    let first = &mut sized[0];
    first.size = (first.size as i64 + want - have).max(1) as u64;
    FrameTrace::new(sized).expect("synthetic trace is valid").0
}
