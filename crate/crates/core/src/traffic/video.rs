use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;

use super::trace::{Frame, FrameTrace, FrameType};
use crate::kernel::SimTime;

/// Decodability of one GoP given which frames arrived complete.
///
/// `kinds[0]` must be the GoP's I frame. `next_intra` is the reception state
/// of the following GoP's I frame, which the trailing B frames reference;
/// `None` when no frame follows, in which case they need only the preceding
/// reference.
pub fn gop_decodable(kinds: &[FrameType], received: &[bool], next_intra: Option<bool>) -> Vec<bool> {
    assert_eq!(kinds.len(), received.len());
    let mut ok = vec![false; kinds.len()];
    let mut last_ref: Option<usize> = None;
    for i in 0..kinds.len() {
        match kinds[i] {
            FrameType::I => ok[i] = received[i],
            FrameType::P => ok[i] = received[i] && last_ref.is_some_and(|r| ok[r]),
            FrameType::B => continue,
        }
        last_ref = Some(i);
    }
    let mut next_ok = next_intra.unwrap_or(true);
    let mut prev_ref_ok = vec![false; kinds.len()];
    let mut seen: Option<usize> = None;
    for i in 0..kinds.len() {
        prev_ref_ok[i] = seen.is_some_and(|r| ok[r]);
        if kinds[i].is_reference() {
            seen = Some(i);
        }
    }
    for i in (0..kinds.len()).rev() {
        if kinds[i].is_reference() {
            next_ok = ok[i];
        } else {
            ok[i] = received[i] && prev_ref_ok[i] && next_ok;
        }
    }
    ok
}

/// Fraction of decodable frames in one GoP.
pub fn gop_dfr(kinds: &[FrameType], received: &[bool], next_intra: Option<bool>) -> f64 {
    let ok = gop_decodable(kinds, received, next_intra);
    ok.iter().filter(|&&d| d).count() as f64 / ok.len() as f64
}

/// Emits trace frames at a fixed frame interval, cycling the trace from a
/// random starting frame with a random phase within the first interval.
#[derive(Debug, Clone)]
pub struct VideoSource {
    trace: Arc<FrameTrace>,
    pos: usize,
    emitted: u64,
    phase: f64,
    interval: f64,
}

impl VideoSource {
    pub fn new<R: Rng + ?Sized>(trace: Arc<FrameTrace>, fps: f64, rng: &mut R) -> Self {
        assert!(fps > 0.0 && !trace.is_empty());
        let interval = 1.0 / fps;
        let pos = rng.random_range(0..trace.len());
        let phase = rng.random::<f64>() * interval;
        VideoSource { trace, pos, emitted: 0, phase, interval }
    }

    /// Emission time of the next frame.
    pub fn next_time(&self) -> SimTime {
        SimTime::from_secs_f64(self.phase + self.emitted as f64 * self.interval)
    }

    /// Returns the next frame and advances.
    pub fn advance(&mut self) -> Frame {
        let f = self.trace.frames[self.pos];
        self.pos = (self.pos + 1) % self.trace.len();
        self.emitted += 1;
        f
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    kind: FrameType,
    total: u32,
    arrived: u32,
    lost: u32,
    emitted: SimTime,
}

impl Slot {
    fn resolved(&self) -> bool {
        self.arrived + self.lost == self.total
    }
}

/// One evaluated GoP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GopOutcome {
    pub start: SimTime,
    pub frames: usize,
    pub dfr: f64,
}

/// Receiver-side DFR accounting for one video session.
///
/// Frames are registered as they are sent; fragment outcomes may be
/// reported in any order. A GoP is evaluated once all its frames and the
/// next GoP's I frame are resolved. Frames before the first I frame belong
/// to no complete GoP and are discarded.
#[derive(Debug, Clone, Default)]
pub struct DfrSink {
    base: u64,
    slots: VecDeque<Slot>,
}

impl DfrSink {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a sent frame of `fragments` datagrams; returns its sequence number.
    pub fn push_frame(&mut self, kind: FrameType, fragments: u32, emitted: SimTime) -> u64 {
        self.slots.push_back(Slot { kind, total: fragments.max(1), arrived: 0, lost: 0, emitted });
        self.base + self.slots.len() as u64 - 1
    }

    pub fn fragment_arrived(&mut self, seq: u64) {
        if let Some(s) = self.slot(seq) {
            s.arrived += 1;
        }
    }

    pub fn fragment_lost(&mut self, seq: u64) {
        if let Some(s) = self.slot(seq) {
            s.lost += 1;
        }
    }

    fn slot(&mut self, seq: u64) -> Option<&mut Slot> {
        let i = seq.checked_sub(self.base)? as usize;
        self.slots.get_mut(i)
    }

    /// Evaluates every GoP that can be decided now.
    pub fn drain(&mut self) -> Vec<GopOutcome> {
        let mut out = Vec::new();
        loop {
            while self.slots.front().is_some_and(|s| s.kind != FrameType::I) {
                self.slots.pop_front();
                self.base += 1;
            }
            let Some(next_i) = self.slots.iter().skip(1).position(|s| s.kind == FrameType::I).map(|p| p + 1) else {
                break;
            };
            if !self.slots.iter().take(next_i + 1).all(Slot::resolved) {
                break;
            }
            let gop: Vec<Slot> = self.slots.drain(..next_i).collect();
            self.base += next_i as u64;
            let kinds: Vec<FrameType> = gop.iter().map(|s| s.kind).collect();
            let received: Vec<bool> = gop.iter().map(|s| s.lost == 0).collect();
            let next = self.slots.front().map(|s| s.lost == 0);
            out.push(GopOutcome { start: gop[0].emitted, frames: gop.len(), dfr: gop_dfr(&kinds, &received, next) });
        }
        out
    }
}
