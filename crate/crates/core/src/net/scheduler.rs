use std::collections::VecDeque;

use serde::Serialize;

use crate::kernel::{SimDuration, SimTime};

/// A frame handed to a transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<P> {
    pub tx: usize,
    pub onu: usize,
    pub start: SimTime,
    pub end: SimTime,
    pub bytes: u32,
    pub item: P,
}

#[derive(Debug, Clone)]
struct Queued<P> {
    arrival: SimTime,
    seq: u64,
    bytes: u32,
    item: P,
}

#[derive(Debug, Clone)]
struct Transmitter<P> {
    tuned_to: Option<usize>,
    busy_until: Option<SimTime>,
    serving: Option<Assignment<P>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SchedulerCounters {
    pub enqueued: u64,
    pub dropped: u64,
    pub dropped_bytes: u64,
    pub transmitted: u64,
    pub transmitted_bytes: u64,
    pub retunes: u64,
}

/// Downstream OLT scheduler for a hybrid TDM/WDM-PON with tunable transmitters.
///
/// Frames wait in per-ONU virtual output queues. Whenever a transmitter is
/// free, the eligible queue whose head frame arrived first is served (global
/// FCFS). A queue is eligible when it is non-empty and its ONU is not already
/// being served, so one ONU never receives from two transmitters at once.
/// Switching a transmitter to a different ONU's wavelength costs
/// `tuning_time` before the frame goes out.
#[derive(Debug, Clone)]
pub struct TunableTxScheduler<P> {
    rate_bps: u64,
    tuning_time: SimDuration,
    voq_limit: Option<u64>,
    voqs: Vec<VecDeque<Queued<P>>>,
    voq_bytes: Vec<u64>,
    onu_busy: Vec<bool>,
    txs: Vec<Transmitter<P>>,
    next_seq: u64,
    counters: SchedulerCounters,
}

impl<P> TunableTxScheduler<P> {
    pub fn new(n_onus: usize, n_tx: usize, rate_bps: u64, tuning_time: SimDuration, voq_limit: Option<u64>) -> Self {
        assert!(n_tx >= 1 && n_tx <= n_onus, "need 1 <= n_tx <= n_onus");
        assert!(rate_bps > 0);
        TunableTxScheduler {
            rate_bps,
            tuning_time,
            voq_limit,
            voqs: (0..n_onus).map(|_| VecDeque::new()).collect(),
            voq_bytes: vec![0; n_onus],
            onu_busy: vec![false; n_onus],
            txs: (0..n_tx).map(|_| Transmitter { tuned_to: None, busy_until: None, serving: None }).collect(),
            next_seq: 0,
            counters: SchedulerCounters::default(),
        }
    }

    pub fn n_tx(&self) -> usize {
        self.txs.len()
    }

    pub fn n_onus(&self) -> usize {
        self.voqs.len()
    }

    pub fn rate_bps(&self) -> u64 {
        self.rate_bps
    }

    pub fn counters(&self) -> SchedulerCounters {
        self.counters
    }

    pub fn queued_bytes(&self, onu: usize) -> u64 {
        self.voq_bytes[onu]
    }

    pub fn queued_frames(&self, onu: usize) -> usize {
        self.voqs[onu].len()
    }

    /// Queues a frame for `onu`; a full queue hands the item back.
    pub fn enqueue(&mut self, now: SimTime, onu: usize, bytes: u32, item: P) -> Result<(), P> {
        if let Some(limit) = self.voq_limit {
            if self.voq_bytes[onu] + bytes as u64 > limit {
                self.counters.dropped += 1;
                self.counters.dropped_bytes += bytes as u64;
                return Err(item);
            }
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.voqs[onu].push_back(Queued { arrival: now, seq, bytes, item });
        self.voq_bytes[onu] += bytes as u64;
        self.counters.enqueued += 1;
        Ok(())
    }

    /// Starts service on every free transmitter that has eligible work.
    /// Returns the new assignments; each must later be completed with
    /// [`complete`](Self::complete) at its `end` time.
    pub fn step(&mut self, now: SimTime) -> Vec<Assignment<P>>
    where
        P: Clone,
    {
        let mut out = Vec::new();
        while let Some(onu) = self.next_eligible() {
            let Some(tx) = self.pick_transmitter(onu) else { break };
            let q = self.voqs[onu].pop_front().expect("eligible queue is non-empty");
            self.voq_bytes[onu] -= q.bytes as u64;
            let retune = self.txs[tx].tuned_to != Some(onu);
            let start = if retune { now + self.tuning_time } else { now };
            if retune {
                self.counters.retunes += 1;
            }
            let end = start + SimDuration::serialization(q.bytes as u64, self.rate_bps);
            let a = Assignment { tx, onu, start, end, bytes: q.bytes, item: q.item };
            self.onu_busy[onu] = true;
            let t = &mut self.txs[tx];
            t.tuned_to = Some(onu);
            t.busy_until = Some(end);
            t.serving = Some(a.clone());
            out.push(a);
        }
        out
    }

    /// Frees transmitter `tx` and returns the frame it finished.
    pub fn complete(&mut self, tx: usize) -> Option<Assignment<P>> {
        let t = &mut self.txs[tx];
        let a = t.serving.take()?;
        t.busy_until = None;
        self.onu_busy[a.onu] = false;
        self.counters.transmitted += 1;
        self.counters.transmitted_bytes += a.bytes as u64;
        Some(a)
    }

    /// True when some transmitter is idle while an eligible frame waits.
    pub fn violates_work_conservation(&self) -> bool {
        self.txs.iter().any(|t| t.serving.is_none()) && self.next_eligible().is_some()
    }

    fn next_eligible(&self) -> Option<usize> {
        let mut best: Option<(SimTime, u64, usize)> = None;
        for (onu, q) in self.voqs.iter().enumerate() {
            if self.onu_busy[onu] {
                continue;
            }
            if let Some(h) = q.front() {
                let key = (h.arrival, h.seq, onu);
                if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                    best = Some(key);
                }
            }
        }
        best.map(|b| b.2)
    }

    fn pick_transmitter(&self, onu: usize) -> Option<usize> {
        let mut first_free = None;
        for (i, t) in self.txs.iter().enumerate() {
            if t.serving.is_some() {
                continue;
            }
            if t.tuned_to == Some(onu) {
                return Some(i);
            }
            first_free.get_or_insert(i);
        }
        first_free
    }
}
