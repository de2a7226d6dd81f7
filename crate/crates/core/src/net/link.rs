use std::collections::VecDeque;

use serde::Serialize;

use crate::kernel::{SimDuration, SimTime};

/// Outcome of offering a packet to a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Offer {
    /// Last bit reaches the far end at this time.
    Delivered(SimTime),
    Dropped,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LinkCounters {
    pub sent_packets: u64,
    pub sent_bytes: u64,
    pub dropped_packets: u64,
    pub dropped_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkSnapshot {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
}

/// Work-conserving FIFO link with a drop-tail byte buffer.
///
/// The queue is never materialised: its backlog at time `t` is the work left
/// before `free_at`. Offers must arrive in non-decreasing time order, which
/// holds whenever the link is fed by a single FIFO upstream or directly by
/// event handlers.
#[derive(Debug, Clone)]
pub struct FifoLink {
    rate_bps: u64,
    propagation: SimDuration,
    buffer_bytes: Option<u64>,
    free_at: SimTime,
    last_offer: SimTime,
    counters: LinkCounters,
    arrivals: VecDeque<SimTime>,
    delivered: u64,
}

impl FifoLink {
    /// `buffer_bytes = None` means an unbounded queue.
    pub fn new(rate_bps: u64, propagation: SimDuration, buffer_bytes: Option<u64>) -> Self {
        assert!(rate_bps > 0, "link rate must be positive");
        FifoLink {
            rate_bps,
            propagation,
            buffer_bytes,
            free_at: SimTime::ZERO,
            last_offer: SimTime::ZERO,
            counters: LinkCounters::default(),
            arrivals: VecDeque::new(),
            delivered: 0,
        }
    }

    pub fn rate_bps(&self) -> u64 {
        self.rate_bps
    }

    pub fn propagation(&self) -> SimDuration {
        self.propagation
    }

    /// Bytes still queued or in transmission at `now`.
    pub fn backlog_bytes(&self, now: SimTime) -> u64 {
        if self.free_at <= now {
            return 0;
        }
        let ns = (self.free_at - now).as_nanos() as u128;
        (ns * self.rate_bps as u128).div_ceil(8_000_000_000) as u64
    }

    pub fn offer(&mut self, now: SimTime, bytes: u32) -> Offer {
        debug_assert!(now >= self.last_offer, "offers must be time ordered");
        self.last_offer = now;
        self.retire(now);
        self.counters.sent_packets += 1;
        self.counters.sent_bytes += bytes as u64;
        if let Some(limit) = self.buffer_bytes {
            if self.backlog_bytes(now) + bytes as u64 > limit {
                self.counters.dropped_packets += 1;
                self.counters.dropped_bytes += bytes as u64;
                return Offer::Dropped;
            }
        }
        let start = now.max(self.free_at);
        self.free_at = start + SimDuration::serialization(bytes as u64, self.rate_bps);
        let arrival = self.free_at + self.propagation;
        self.arrivals.push_back(arrival);
        Offer::Delivered(arrival)
    }

    pub fn counters(&self) -> LinkCounters {
        self.counters
    }

    /// Packet accounting at `now`; `sent == delivered + dropped + in_flight`.
    pub fn snapshot(&mut self, now: SimTime) -> LinkSnapshot {
        self.retire(now);
        LinkSnapshot {
            sent: self.counters.sent_packets,
            delivered: self.delivered,
            dropped: self.counters.dropped_packets,
            in_flight: self.arrivals.len() as u64,
        }
    }

    fn retire(&mut self, now: SimTime) {
        while self.arrivals.front().is_some_and(|&t| t <= now) {
            self.arrivals.pop_front();
            self.delivered += 1;
        }
    }
}
