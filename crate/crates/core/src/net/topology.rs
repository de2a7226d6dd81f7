use serde::{Deserialize, Serialize};

use super::link::{FifoLink, Offer};
use super::scheduler::{Assignment, SchedulerCounters, TunableTxScheduler};
use crate::kernel::{SimDuration, SimTime};

/// Link rates of the test bed in b/s; `rtt` is the server to OLT round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatePlan {
    pub r_b: f64,
    pub r_f: f64,
    pub r_d: f64,
    pub r_u: f64,
    pub rtt: f64,
}

impl RatePlan {
    pub fn full_scale() -> Self {
        RatePlan { r_b: 1e12, r_f: 1e10, r_d: 1e10, r_u: 1e10, rtt: 0.01 }
    }

    /// Divides every rate by `factor`; the round trip is unchanged.
    pub fn scaled(&self, factor: f64) -> Self {
        RatePlan { r_b: self.r_b / factor, r_f: self.r_f / factor, r_d: self.r_d / factor, r_u: self.r_u / factor, rtt: self.rtt }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        for (name, v) in [("r_b", self.r_b), ("r_f", self.r_f), ("r_d", self.r_d), ("r_u", self.r_u)] {
            if !(v.is_finite() && v >= 1.0) {
                return Err(TopologyError::Rate(name, v));
            }
        }
        if !(self.rtt.is_finite() && self.rtt >= 0.0) {
            return Err(TopologyError::Rate("rtt", self.rtt));
        }
        Ok(())
    }
}

/// Byte limits of the drop-tail buffers; `None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BufferPlan {
    pub olt_queue: Option<u64>,
    pub port: Option<u64>,
}

impl BufferPlan {
    pub fn full_scale() -> Self {
        BufferPlan { olt_queue: Some(1_000_000), port: Some(256_000) }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let s = |b: Option<u64>| b.map(|v| ((v as f64 / factor).round() as u64).max(1));
        BufferPlan { olt_queue: s(self.olt_queue), port: s(self.port) }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("rate {0} must be finite and at least 1 b/s, got {1}")]
    Rate(&'static str, f64),
    #[error("need at least one ONU and one user per ONU")]
    EmptyTopology,
    #[error("n_tx must satisfy 1 <= n_tx <= n_onus ({n_onus}), got {n_tx}")]
    TransmitterCount { n_tx: usize, n_onus: usize },
}

/// Result of sending a frame downstream at the server.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Downstream {
    /// Frame reaches the user at this time.
    Delivered(SimTime),
    Dropped,
    /// Frame reaches the OLT at this time; the caller must hand it to
    /// [`AccessNetwork::olt_arrival`] then.
    AtOlt(SimTime),
}

/// Completion of one OLT transmission.
#[derive(Debug, Clone)]
pub struct TxCompletion<P> {
    pub item: P,
    pub user: usize,
    /// `None` when the user port dropped the frame.
    pub delivered_at: Option<SimTime>,
    /// Transmissions started as a consequence; each needs its own completion
    /// event at `end`.
    pub started: Vec<Assignment<(usize, P)>>,
}

#[derive(Debug, Clone)]
enum Olt<P> {
    Reference { lines: Vec<FifoLink> },
    HybridPon { scheduler: TunableTxScheduler<(usize, P)> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NetworkCounters {
    pub down_offered: u64,
    pub down_offered_bytes: u64,
    pub down_delivered: u64,
    pub olt_drops: u64,
    pub port_drops: u64,
}

/// Downstream and upstream paths between the servers and every user.
///
/// Downstream: servers, backbone (r_b, rtt/2, unbounded), then either a
/// dedicated line per ONU at the swept rate R (reference) or per-ONU virtual
/// queues served by tunable transmitters at r_d (hybrid PON), then a per-user
/// port at r_u. Upstream is contention-free: a per-ONU FIFO at r_u followed by
/// backbone serialization and rtt/2.
#[derive(Debug, Clone)]
pub struct AccessNetwork<P> {
    users_per_onu: usize,
    n_onus: usize,
    backbone: FifoLink,
    olt: Olt<P>,
    ports: Vec<FifoLink>,
    uplinks: Vec<FifoLink>,
    up_fixed: (u64, SimDuration),
    counters: NetworkCounters,
}

impl<P> AccessNetwork<P> {
    pub fn build_reference(plan: &RatePlan, buffers: &BufferPlan, line_rate: f64, n: usize, n_onus: usize) -> Result<Self, TopologyError> {
        plan.validate()?;
        if !(line_rate.is_finite() && line_rate >= 1.0) {
            return Err(TopologyError::Rate("line_rate", line_rate));
        }
        let lines = (0..n_onus).map(|_| FifoLink::new(line_rate.round() as u64, SimDuration::ZERO, buffers.olt_queue)).collect();
        Self::assemble(plan, buffers, n, n_onus, Olt::Reference { lines })
    }

    pub fn build_hybrid_pon(plan: &RatePlan, buffers: &BufferPlan, n_tx: usize, n: usize, n_onus: usize, tuning_time: f64) -> Result<Self, TopologyError> {
        plan.validate()?;
        if n_tx == 0 || n_tx > n_onus {
            return Err(TopologyError::TransmitterCount { n_tx, n_onus });
        }
        let scheduler = TunableTxScheduler::new(n_onus, n_tx, plan.r_d.round() as u64, SimDuration::from_secs_f64(tuning_time), buffers.olt_queue);
        Self::assemble(plan, buffers, n, n_onus, Olt::HybridPon { scheduler })
    }

    fn assemble(plan: &RatePlan, buffers: &BufferPlan, n: usize, n_onus: usize, olt: Olt<P>) -> Result<Self, TopologyError> {
        if n == 0 || n_onus == 0 {
            return Err(TopologyError::EmptyTopology);
        }
        let half_rtt = SimDuration::from_secs_f64(plan.rtt / 2.0);
        let r_u = plan.r_u.round() as u64;
        Ok(AccessNetwork {
            users_per_onu: n,
            n_onus,
            backbone: FifoLink::new(plan.r_b.round() as u64, half_rtt, None),
            olt,
            ports: (0..n * n_onus).map(|_| FifoLink::new(r_u, SimDuration::ZERO, buffers.port)).collect(),
            uplinks: (0..n_onus).map(|_| FifoLink::new(r_u, SimDuration::ZERO, None)).collect(),
            up_fixed: (plan.r_b.round() as u64, half_rtt),
            counters: NetworkCounters::default(),
        })
    }

    pub fn n_users(&self) -> usize {
        self.users_per_onu * self.n_onus
    }

    pub fn onu_of(&self, user: usize) -> usize {
        user / self.users_per_onu
    }

    pub fn counters(&self) -> NetworkCounters {
        self.counters
    }

    pub fn scheduler_counters(&self) -> Option<SchedulerCounters> {
        match &self.olt {
            Olt::HybridPon { scheduler } => Some(scheduler.counters()),
            Olt::Reference { .. } => None,
        }
    }

    /// Sends `bytes` from the servers toward `user` at `now`. Calls must be
    /// made in non-decreasing `now`.
    pub fn send_down(&mut self, now: SimTime, user: usize, bytes: u32) -> Downstream {
        self.counters.down_offered += 1;
        self.counters.down_offered_bytes += bytes as u64;
        let Offer::Delivered(at_olt) = self.backbone.offer(now, bytes) else {
            unreachable!("backbone buffer is unbounded")
        };
        match &mut self.olt {
            Olt::HybridPon { .. } => Downstream::AtOlt(at_olt),
            Olt::Reference { lines } => {
                let onu = user / self.users_per_onu;
                match lines[onu].offer(at_olt, bytes) {
                    Offer::Dropped => {
                        self.counters.olt_drops += 1;
                        Downstream::Dropped
                    }
                    Offer::Delivered(at_onu) => self.through_port(at_onu, user, bytes).map_or(Downstream::Dropped, Downstream::Delivered),
                }
            }
        }
    }

    /// Hybrid PON only: queues a frame that reached the OLT and returns the
    /// transmissions it started. A full queue hands the item back.
    pub fn olt_arrival(&mut self, now: SimTime, user: usize, bytes: u32, item: P) -> Result<Vec<Assignment<(usize, P)>>, P>
    where
        P: Clone,
    {
        let onu = user / self.users_per_onu;
        let Olt::HybridPon { scheduler } = &mut self.olt else {
            panic!("olt_arrival on a reference network")
        };
        match scheduler.enqueue(now, onu, bytes, (user, item)) {
            Ok(()) => Ok(scheduler.step(now)),
            Err((_, item)) => {
                self.counters.olt_drops += 1;
                Err(item)
            }
        }
    }

    /// Hybrid PON only: transmitter `tx` finished at `now`.
    pub fn tx_done(&mut self, now: SimTime, tx: usize) -> TxCompletion<P>
    where
        P: Clone,
    {
        let Olt::HybridPon { scheduler } = &mut self.olt else {
            panic!("tx_done on a reference network")
        };
        let done = scheduler.complete(tx).expect("completion for an idle transmitter");
        debug_assert_eq!(done.end, now);
        let started = scheduler.step(now);
        let (user, item) = done.item;
        let delivered_at = self.through_port(now, user, done.bytes);
        TxCompletion { item, user, delivered_at, started }
    }

    /// Sends `bytes` from `user` to the servers; returns the arrival time.
    pub fn send_up(&mut self, now: SimTime, user: usize, bytes: u32) -> SimTime {
        let onu = user / self.users_per_onu;
        let Offer::Delivered(at_olt) = self.uplinks[onu].offer(now, bytes) else {
            unreachable!("upstream is unbounded")
        };
        at_olt + SimDuration::serialization(bytes as u64, self.up_fixed.0) + self.up_fixed.1
    }

    fn through_port(&mut self, at: SimTime, user: usize, bytes: u32) -> Option<SimTime> {
        match self.ports[user].offer(at, bytes) {
            Offer::Delivered(t) => {
                self.counters.down_delivered += 1;
                Some(t)
            }
            Offer::Dropped => {
                self.counters.port_drops += 1;
                None
            }
        }
    }
}
