use serde::{Deserialize, Serialize};

use crate::kernel::{SimDuration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenoConfig {
    pub mss: u32,
    pub initial_window: u32,
    pub initial_rto: f64,
    pub min_rto: f64,
    pub max_rto: f64,
    /// Consecutive timeouts without progress before the transfer aborts.
    pub max_retries: u32,
    /// Adds one round trip of connection setup before the first request.
    pub handshake: bool,
}

impl Default for RenoConfig {
    fn default() -> Self {
        RenoConfig { mss: 1434, initial_window: 3, initial_rto: 1.0, min_rto: 0.2, max_rto: 60.0, max_retries: 8, handshake: false }
    }
}

impl RenoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.mss == 0 || self.mss > super::MAX_PAYLOAD {
            return Err(format!("mss must be in 1..={}", super::MAX_PAYLOAD));
        }
        if self.initial_window == 0 {
            return Err("initial_window must be positive".into());
        }
        if !(self.min_rto > 0.0 && self.min_rto <= self.initial_rto && self.initial_rto <= self.max_rto && self.max_rto.is_finite()) {
            return Err("need 0 < min_rto <= initial_rto <= max_rto".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CcState {
    SlowStart,
    CongestionAvoidance,
    Recovery,
}

/// One data segment covering `[seq, seq + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub seq: u64,
    pub len: u32,
    pub retransmit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("connection aborted after {0} consecutive retransmission timeouts")]
pub struct Aborted(pub u32);

/// Reno sender over a byte stream the application appends to.
///
/// Invariants: `snd_una <= snd_nxt <= snd_max <= app_end`, `cwnd >= mss`.
/// The retransmission timer is a deadline the owner polls; firing it early
/// is harmless because [`on_timer`](Self::on_timer) rechecks it.
#[derive(Debug, Clone)]
pub struct RenoSender {
    cfg: RenoConfig,
    mss: u64,
    snd_una: u64,
    snd_nxt: u64,
    snd_max: u64,
    app_end: u64,
    cwnd: u64,
    ssthresh: u64,
    dupacks: u32,
    in_recovery: bool,
    srtt: Option<f64>,
    rttvar: f64,
    rto: f64,
    timed: Option<(u64, SimTime)>,
    deadline: Option<SimTime>,
    timeouts: u32,
    last_send: SimTime,
    stats: SenderStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SenderStats {
    pub segments_sent: u64,
    pub retransmits: u64,
    pub fast_retransmits: u64,
    pub timeouts: u64,
}

impl RenoSender {
    pub fn new(cfg: RenoConfig) -> Self {
        let mss = cfg.mss as u64;
        RenoSender {
            cfg,
            mss,
            snd_una: 0,
            snd_nxt: 0,
            snd_max: 0,
            app_end: 0,
            cwnd: cfg.initial_window as u64 * mss,
            ssthresh: u64::MAX / 2,
            dupacks: 0,
            in_recovery: false,
            srtt: None,
            rttvar: 0.0,
            rto: cfg.initial_rto,
            timed: None,
            deadline: None,
            timeouts: 0,
            last_send: SimTime::ZERO,
            stats: SenderStats::default(),
        }
    }

    pub fn cwnd(&self) -> u64 {
        self.cwnd
    }

    pub fn ssthresh(&self) -> u64 {
        self.ssthresh
    }

    pub fn snd_una(&self) -> u64 {
        self.snd_una
    }

    pub fn app_end(&self) -> u64 {
        self.app_end
    }

    pub fn srtt(&self) -> Option<f64> {
        self.srtt
    }

    pub fn rto(&self) -> f64 {
        self.rto
    }

    pub fn stats(&self) -> SenderStats {
        self.stats
    }

    pub fn deadline(&self) -> Option<SimTime> {
        self.deadline
    }

    pub fn state(&self) -> CcState {
        if self.in_recovery {
            CcState::Recovery
        } else if self.cwnd < self.ssthresh {
            CcState::SlowStart
        } else {
            CcState::CongestionAvoidance
        }
    }

    pub fn is_idle(&self) -> bool {
        self.snd_una == self.app_end
    }

    /// Appends `bytes` to the stream and returns the segments now sendable.
    pub fn write(&mut self, now: SimTime, bytes: u64) -> Vec<Segment> {
        if self.snd_una == self.snd_max && now.saturating_since(self.last_send).as_secs_f64() > self.rto {
            // restart window after an idle period
            self.cwnd = self.cwnd.min(self.cfg.initial_window as u64 * self.mss);
        }
        self.app_end += bytes;
        self.fill(now)
    }

    /// Processes a cumulative acknowledgement for everything below `ack`.
    pub fn on_ack(&mut self, now: SimTime, ack: u64) -> Vec<Segment> {
        if ack > self.snd_max {
            debug_assert!(false, "ack beyond snd_max");
            return Vec::new();
        }
        let mut out = Vec::new();
        if ack > self.snd_una {
            let acked = ack - self.snd_una;
            if let Some((end, sent)) = self.timed {
                if ack >= end {
                    self.rtt_sample(now.saturating_since(sent).as_secs_f64());
                    self.timed = None;
                }
            }
            self.snd_una = ack;
            self.snd_nxt = self.snd_nxt.max(ack);
            self.timeouts = 0;
            if self.in_recovery {
                self.in_recovery = false;
                self.cwnd = self.ssthresh;
            } else if self.cwnd < self.ssthresh {
                self.cwnd += acked.min(self.mss);
            } else {
                self.cwnd += (self.mss * self.mss / self.cwnd).max(1);
            }
            self.dupacks = 0;
            self.deadline = (self.snd_una < self.snd_max).then(|| now + self.rto_duration());
        } else if ack == self.snd_una && self.snd_una < self.snd_max {
            self.dupacks += 1;
            if self.dupacks == 3 && !self.in_recovery {
                self.ssthresh = self.flight().div_ceil(2).max(2 * self.mss);
                self.stats.fast_retransmits += 1;
                out.push(self.emit(now, self.snd_una, true));
                self.cwnd = self.ssthresh + 3 * self.mss;
                self.in_recovery = true;
            } else if self.in_recovery {
                self.cwnd += self.mss;
            }
        }
        out.extend(self.fill(now));
        out
    }

    /// Handles the retransmission timer at `now`. Returns no segments when
    /// the deadline has not passed.
    pub fn on_timer(&mut self, now: SimTime) -> Result<Vec<Segment>, Aborted> {
        match self.deadline {
            Some(d) if d <= now => {}
            _ => return Ok(Vec::new()),
        }
        self.timeouts += 1;
        self.stats.timeouts += 1;
        if self.timeouts > self.cfg.max_retries {
            self.deadline = None;
            return Err(Aborted(self.timeouts));
        }
        self.ssthresh = (self.snd_max - self.snd_una).div_ceil(2).max(2 * self.mss);
        self.cwnd = self.mss;
        self.in_recovery = false;
        self.dupacks = 0;
        self.timed = None;
        self.snd_nxt = self.snd_una;
        self.rto = (self.rto * 2.0).min(self.cfg.max_rto);
        let seg = self.emit(now, self.snd_una, true);
        self.snd_nxt = seg.seq + seg.len as u64;
        self.deadline = Some(now + self.rto_duration());
        Ok(vec![seg])
    }

    fn flight(&self) -> u64 {
        self.snd_nxt - self.snd_una
    }

    fn fill(&mut self, now: SimTime) -> Vec<Segment> {
        let mut out = Vec::new();
        while self.snd_nxt < self.app_end {
            let len = (self.app_end - self.snd_nxt).min(self.mss);
            if self.flight() + len > self.cwnd && self.flight() > 0 {
                break;
            }
            let seg = self.emit(now, self.snd_nxt, self.snd_nxt < self.snd_max);
            self.snd_nxt += seg.len as u64;
            out.push(seg);
        }
        out
    }

    fn emit(&mut self, now: SimTime, seq: u64, retransmit: bool) -> Segment {
        let len = (self.app_end - seq).min(self.mss) as u32;
        let end = seq + len as u64;
        if retransmit {
            self.stats.retransmits += 1;
            self.timed = None;
        } else if self.timed.is_none() {
            self.timed = Some((end, now));
        }
        self.snd_max = self.snd_max.max(end);
        self.stats.segments_sent += 1;
        self.last_send = now;
        if self.deadline.is_none() {
            self.deadline = Some(now + self.rto_duration());
        }
        Segment { seq, len, retransmit }
    }

    fn rtt_sample(&mut self, r: f64) {
        match self.srtt {
            None => {
                self.srtt = Some(r);
                self.rttvar = r / 2.0;
            }
            Some(s) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (s - r).abs();
                self.srtt = Some(0.875 * s + 0.125 * r);
            }
        }
        let s = self.srtt.unwrap_or(r);
        self.rto = (s + 4.0 * self.rttvar).clamp(self.cfg.min_rto, self.cfg.max_rto);
    }

    fn rto_duration(&self) -> SimDuration {
        SimDuration::from_secs_f64(self.rto)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(ms: f64) -> SimTime {
        SimTime::from_secs_f64(ms / 1000.0)
    }

    #[test]
    fn initial_window_limits_first_flight() {
        let mut s = RenoSender::new(RenoConfig::default());
        let segs = s.write(SimTime::ZERO, 100_000);
        assert_eq!(segs.len(), 3);
        assert!(segs.iter().all(|x| x.len == 1434 && !x.retransmit));
        assert_eq!(s.state(), CcState::SlowStart);
        assert!(s.deadline().is_some());
    }

    #[test]
    fn slow_start_adds_one_mss_per_ack() {
        let mut s = RenoSender::new(RenoConfig::default());
        s.write(SimTime::ZERO, 1_000_000);
        let before = s.cwnd();
        let more = s.on_ack(t(10.0), 1434);
        assert_eq!(s.cwnd(), before + 1434);
        assert_eq!(more.len(), 2, "one freed slot plus one window increment");
        assert_eq!(s.srtt(), Some(0.01));
    }

    #[test]
    fn three_dupacks_trigger_fast_retransmit() {
        let mut s = RenoSender::new(RenoConfig::default());
        s.write(SimTime::ZERO, 1_000_000);
        for k in 1..=7u64 {
            s.on_ack(t(k as f64), k * 1434);
        }
        let una = s.snd_una();
        let flight = s.snd_max - una;
        assert!(s.on_ack(t(20.0), una).iter().all(|x| !x.retransmit));
        s.on_ack(t(20.0), una);
        let r = s.on_ack(t(20.0), una);
        assert_eq!(r[0], Segment { seq: una, len: 1434, retransmit: true });
        assert_eq!(s.state(), CcState::Recovery);
        assert_eq!(s.ssthresh(), flight.div_ceil(2));
        assert_eq!(s.cwnd(), s.ssthresh() + 3 * 1434);
        s.on_ack(t(21.0), una + 1434);
        assert_eq!(s.cwnd(), s.ssthresh(), "deflate on exit");
        assert_ne!(s.state(), CcState::Recovery);
    }

    #[test]
    fn timeout_goes_back_to_one_segment_with_backoff() {
        let mut s = RenoSender::new(RenoConfig::default());
        s.write(SimTime::ZERO, 10_000);
        let d = s.deadline().unwrap();
        assert!(s.on_timer(SimTime::from_nanos(d.as_nanos() - 1)).unwrap().is_empty());
        let r = s.on_timer(d).unwrap();
        assert_eq!(r, vec![Segment { seq: 0, len: 1434, retransmit: true }]);
        assert_eq!(s.cwnd(), 1434);
        assert_eq!(s.rto(), 2.0);
        let d2 = s.deadline().unwrap();
        assert_eq!(d2, d + SimDuration::from_secs_f64(2.0));
    }

    #[test]
    fn aborts_after_max_retries() {
        let cfg = RenoConfig { max_retries: 2, ..RenoConfig::default() };
        let mut s = RenoSender::new(cfg);
        s.write(SimTime::ZERO, 10);
        let mut now = SimTime::ZERO;
        for _ in 0..2 {
            now = s.deadline().unwrap();
            s.on_timer(now).unwrap();
        }
        now = s.deadline().unwrap().max(now);
        assert_eq!(s.on_timer(now), Err(Aborted(3)));
    }

    #[test]
    fn karn_skips_samples_from_retransmitted_data() {
        let mut s = RenoSender::new(RenoConfig::default());
        s.write(SimTime::ZERO, 100);
        let d = s.deadline().unwrap();
        s.on_timer(d).unwrap();
        s.on_ack(d + SimDuration::from_secs_f64(0.01), 100);
        assert_eq!(s.srtt(), None);
        assert_eq!(s.rto(), 2.0, "backed-off value kept until a valid sample");
    }

    #[test]
    fn cwnd_never_below_one_mss() {
        let mut s = RenoSender::new(RenoConfig::default());
        s.write(SimTime::ZERO, 1_000_000);
        for _ in 0..5 {
            let d = s.deadline().unwrap();
            s.on_timer(d).unwrap();
            assert!(s.cwnd() >= 1434);
        }
    }

    #[test]
    fn idle_restart_resets_window() {
        let mut s = RenoSender::new(RenoConfig::default());
        s.write(SimTime::ZERO, 20 * 1434);
        let mut now = SimTime::ZERO;
        let mut acked = 0;
        while acked < 20 * 1434 {
            now = now + SimDuration::from_secs_f64(0.001);
            acked = (acked + 1434).min(20 * 1434);
            s.on_ack(now, acked);
        }
        assert!(s.cwnd() > 3 * 1434);
        let segs = s.write(now + SimDuration::from_secs_f64(5.0), 1_000_000);
        assert_eq!(segs.len(), 3);
    }
}
