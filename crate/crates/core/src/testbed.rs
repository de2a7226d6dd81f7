//! The virtual test bed: end users with HTTP, FTP and video sessions behind
//! one access network, driven by the event kernel.

use std::sync::Arc;

use serde::Serialize;

use crate::kernel::{derive_stream, ComponentId, Context, HandlerError, Model, RngStream, RunSummary, SimDuration, SimEvent, SimTime, Simulator, WarmupGate};
use crate::net::{AccessNetwork, Assignment, Downstream, NetworkCounters, SchedulerCounters};
use crate::scenario::{Architecture, ConfigError, Scenario};
use crate::traffic::{DfrSink, Fetch, FrameTrace, FtpModel, HttpModel, PagePlan, SessionKind, SessionRecord, VideoSource};
use crate::transport::{fragment, fragment_count, RenoSender, Segment, StreamReceiver, ACK_BYTES, MAX_PAYLOAD, OVERHEAD};

/// Performance measures produced by a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureId {
    PageDelay,
    FtpRate,
    Dfr,
}

impl MeasureId {
    pub const ALL: [MeasureId; 3] = [MeasureId::PageDelay, MeasureId::FtpRate, MeasureId::Dfr];

    pub fn as_str(self) -> &'static str {
        match self {
            MeasureId::PageDelay => "page_delay",
            MeasureId::FtpRate => "ftp_rate",
            MeasureId::Dfr => "dfr",
        }
    }

    fn of(kind: SessionKind) -> Self {
        match kind {
            SessionKind::Page => MeasureId::PageDelay,
            SessionKind::File => MeasureId::FtpRate,
            SessionKind::VideoGop => MeasureId::Dfr,
        }
    }
}

/// Running moments of the admitted records of one measure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Accumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub min_start: Option<SimTime>,
}

impl Accumulator {
    fn add(&mut self, start: SimTime, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
        self.min_start = Some(self.min_start.map_or(start, |m| m.min(start)));
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TransportCounters {
    pub segments: u64,
    pub retransmits: u64,
    pub timeouts: u64,
    pub aborted_transfers: u64,
    pub video_fragments: u64,
    pub video_fragments_lost: u64,
}

/// Everything one run produces.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub run_seed: u64,
    pub measures: Vec<(MeasureId, Accumulator)>,
    pub summary: RunSummary,
    pub network: NetworkCounters,
    pub scheduler: Option<SchedulerCounters>,
    pub transport: TransportCounters,
    /// Admitted records, kept only when requested.
    #[serde(skip)]
    pub records: Vec<SessionRecord>,
}

impl RunOutput {
    pub fn measure(&self, id: MeasureId) -> &Accumulator {
        &self.measures.iter().find(|(m, _)| *m == id).expect("all measures present").1
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub keep_records: bool,
}

#[derive(Debug, Clone)]
pub enum Pkt {
    Data { conn: u32, epoch: u32, seq: u64, len: u32 },
    Video { session: u32, frame: u64 },
}

#[derive(Debug, Clone)]
pub enum Ev {
    OltArrival { user: u32, bytes: u32, pkt: Pkt },
    TxDone { tx: u32 },
    Segment { conn: u32, epoch: u32, seq: u64, len: u32 },
    Ack { conn: u32, epoch: u32, ack: u64 },
    Request { conn: u32, epoch: u32, response: u64 },
    Syn { conn: u32, epoch: u32 },
    SynAck { conn: u32, epoch: u32 },
    SynRetry { conn: u32, epoch: u32 },
    Timer { conn: u32, epoch: u32 },
    HttpWake { session: u32 },
    ParsingDone { session: u32 },
    FtpWake { session: u32 },
    VideoFrame { session: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Owner {
    Http(u32),
    Ftp(u32),
}

struct Conn {
    user: usize,
    owner: Owner,
    epoch: u32,
    sender: RenoSender,
    receiver: StreamReceiver,
    timer_at: Option<SimTime>,
    established: bool,
    syn_tries: u32,
    pending: Option<Fetch>,
    expect_end: Option<u64>,
}

struct HttpSession {
    conn: u32,
    rng: RngStream,
    plan: Option<PagePlan>,
    /// 0 while fetching the HTML object, k while fetching embedded object k.
    object: usize,
    page_start: SimTime,
}

struct FtpSession {
    conn: u32,
    rng: RngStream,
    file_bytes: u64,
    reading: f64,
    start: SimTime,
}

struct VideoSession {
    user: usize,
    source: VideoSource,
    sink: DfrSink,
}

struct Ids {
    net: ComponentId,
    tcp: ComponentId,
    http: ComponentId,
    ftp: ComponentId,
    video: ComponentId,
}

struct Testbed {
    ids: Ids,
    net: AccessNetwork<Pkt>,
    conns: Vec<Conn>,
    http: Vec<HttpSession>,
    ftp: Vec<FtpSession>,
    video: Vec<VideoSession>,
    http_model: HttpModel,
    ftp_model: FtpModel,
    cfg: crate::transport::RenoConfig,
    gate: WarmupGate,
    measures: [Accumulator; 3],
    counters: TransportCounters,
    keep_records: bool,
    records: Vec<SessionRecord>,
}

fn secs(x: f64) -> SimDuration {
    SimDuration::from_secs_f64(x)
}

/// Runs one replication of `scenario` with `run_seed`.
pub fn run_once(scenario: &Scenario, trace: Arc<FrameTrace>, run_seed: u64, opts: RunOptions) -> Result<RunOutput, RunError> {
    scenario.validate()?;
    let mut sim: Simulator<Ev> = Simulator::new();
    let ids = Ids { net: sim.register("network"), tcp: sim.register("transport"), http: sim.register("http"), ftp: sim.register("ftp"), video: sim.register("video") };
    let n = scenario.users_per_onu;
    let net = match scenario.architecture {
        Architecture::Reference { line_rate } => AccessNetwork::build_reference(&scenario.rate_plan, &scenario.buffers, line_rate, n, scenario.n_onus),
        Architecture::HybridPon { n_tx, tuning_time } => AccessNetwork::build_hybrid_pon(&scenario.rate_plan, &scenario.buffers, n_tx, n, scenario.n_onus, tuning_time),
    }
    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let t = &scenario.traffic;
    let mut tb = Testbed {
        ids,
        net,
        conns: Vec::new(),
        http: Vec::new(),
        ftp: Vec::new(),
        video: Vec::new(),
        http_model: HttpModel::new(&t.http, t.size_scale).map_err(|e| ConfigError::Invalid(e.to_string()))?,
        ftp_model: FtpModel::new(&t.ftp, t.size_scale).map_err(|e| ConfigError::Invalid(e.to_string()))?,
        cfg: scenario.transport,
        gate: WarmupGate::new(SimTime::from_secs_f64(scenario.warmup)),
        measures: [Accumulator::default(); 3],
        counters: TransportCounters::default(),
        keep_records: opts.keep_records,
        records: Vec::new(),
    };
    for user in 0..scenario.n_users() {
        for k in 0..t.users.n_h {
            let conn = tb.new_conn(user, Owner::Http(tb.http.len() as u32));
            let mut rng = derive_stream(&format!("http/{user}/{k}"), run_seed);
            let first = tb.http_model.reading_time(&mut rng);
            sim.schedule(SimTime::ZERO + secs(first), tb.ids.http, Ev::HttpWake { session: tb.http.len() as u32 })?;
            tb.http.push(HttpSession { conn, rng, plan: None, object: 0, page_start: SimTime::ZERO });
        }
        for k in 0..t.users.n_f {
            let conn = tb.new_conn(user, Owner::Ftp(tb.ftp.len() as u32));
            let mut rng = derive_stream(&format!("ftp/{user}/{k}"), run_seed);
            let first = tb.ftp_model.reading_time(&mut rng);
            sim.schedule(SimTime::ZERO + secs(first), tb.ids.ftp, Ev::FtpWake { session: tb.ftp.len() as u32 })?;
            tb.ftp.push(FtpSession { conn, rng, file_bytes: 0, reading: 0.0, start: SimTime::ZERO });
        }
        for k in 0..t.users.n_v {
            let mut rng = derive_stream(&format!("video/{user}/{k}"), run_seed);
            let source = VideoSource::new(trace.clone(), t.video.fps, &mut rng);
            sim.schedule(source.next_time(), tb.ids.video, Ev::VideoFrame { session: tb.video.len() as u32 })?;
            tb.video.push(VideoSession { user, source, sink: DfrSink::new() });
        }
    }
    let summary = sim.run_until(&mut tb, SimTime::from_secs_f64(scenario.sim_time))?;
    Ok(RunOutput {
        run_seed,
        measures: MeasureId::ALL.iter().map(|&m| (m, tb.measures[m as usize])).collect(),
        summary,
        network: tb.net.counters(),
        scheduler: tb.net.scheduler_counters(),
        transport: tb.counters,
        records: tb.records,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Kernel(#[from] crate::kernel::KernelError),
}

impl Testbed {
    fn new_conn(&mut self, user: usize, owner: Owner) -> u32 {
        self.conns.push(Conn {
            user,
            owner,
            epoch: 0,
            sender: RenoSender::new(self.cfg),
            receiver: StreamReceiver::new(),
            timer_at: None,
            established: !self.cfg.handshake,
            syn_tries: 0,
            pending: None,
            expect_end: None,
        });
        (self.conns.len() - 1) as u32
    }

    fn reset_conn(&mut self, c: u32) {
        let cfg = self.cfg;
        let conn = &mut self.conns[c as usize];
        conn.epoch += 1;
        conn.sender = RenoSender::new(cfg);
        conn.receiver = StreamReceiver::new();
        conn.timer_at = None;
        conn.established = !cfg.handshake;
        conn.syn_tries = 0;
        conn.pending = None;
        conn.expect_end = None;
    }

    fn record(&mut self, kind: SessionKind, user: usize, start: SimTime, end: SimTime, value: f64) {
        if !self.gate.admits(start) {
            return;
        }
        debug_assert!(value.is_finite() && end >= start);
        self.measures[MeasureId::of(kind) as usize].add(start, value);
        if self.keep_records {
            self.records.push(SessionRecord { kind, user, start, end, value });
        }
    }

    // ---- client side ----

    /// Client issues a request for `fetch.response` bytes on connection `c`.
    fn fetch(&mut self, c: u32, fetch: Fetch, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let now = ctx.now();
        let conn = &mut self.conns[c as usize];
        conn.expect_end = Some(conn.receiver.delivered() + fetch.response);
        if !conn.established {
            conn.pending = Some(fetch);
            return self.send_syn(c, ctx);
        }
        let user = conn.user;
        let epoch = conn.epoch;
        let mut arrival = now;
        for d in fragment(fetch.request) {
            arrival = self.net.send_up(now, user, d.wire_size());
        }
        ctx.schedule_at(arrival, self.ids.tcp, Ev::Request { conn: c, epoch, response: fetch.response })?;
        Ok(())
    }

    fn send_syn(&mut self, c: u32, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let now = ctx.now();
        let conn = &mut self.conns[c as usize];
        let (user, epoch) = (conn.user, conn.epoch);
        let backoff = self.cfg.initial_rto * f64::from(1u32 << conn.syn_tries.min(16));
        conn.syn_tries += 1;
        let at = self.net.send_up(now, user, OVERHEAD);
        ctx.schedule_at(at, self.ids.tcp, Ev::Syn { conn: c, epoch })?;
        ctx.schedule_in(secs(backoff.min(self.cfg.max_rto)), self.ids.tcp, Ev::SynRetry { conn: c, epoch })?;
        Ok(())
    }

    fn on_segment(&mut self, c: u32, seq: u64, len: u32, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let now = ctx.now();
        let conn = &mut self.conns[c as usize];
        let ack = conn.receiver.on_segment(seq, len);
        let (user, epoch) = (conn.user, conn.epoch);
        let at = self.net.send_up(now, user, ACK_BYTES);
        ctx.schedule_at(at, self.ids.tcp, Ev::Ack { conn: c, epoch, ack })?;
        let conn = &mut self.conns[c as usize];
        if conn.expect_end.is_some_and(|e| conn.receiver.delivered() >= e) {
            conn.expect_end = None;
            let owner = conn.owner;
            self.fetch_done(owner, ctx)?;
        }
        Ok(())
    }

    fn fetch_done(&mut self, owner: Owner, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let now = ctx.now();
        match owner {
            Owner::Http(s) => {
                let sess = &mut self.http[s as usize];
                let plan = sess.plan.as_ref().expect("page in progress");
                if sess.object == 0 {
                    ctx.schedule_in(secs(plan.parsing), self.ids.http, Ev::ParsingDone { session: s })?;
                } else if sess.object < plan.embedded.len() {
                    let next = plan.embedded[sess.object];
                    sess.object += 1;
                    let conn = sess.conn;
                    self.fetch(conn, next, ctx)?;
                } else {
                    self.page_done(s, ctx)?;
                }
            }
            Owner::Ftp(s) => {
                let sess = &self.ftp[s as usize];
                let elapsed = now.saturating_since(sess.start).as_secs_f64();
                let (start, bytes, reading) = (sess.start, sess.file_bytes, sess.reading);
                let user = self.conns[sess.conn as usize].user;
                if elapsed > 0.0 {
                    self.record(SessionKind::File, user, start, now, bytes as f64 * 8.0 / elapsed);
                }
                ctx.schedule_in(secs(reading), self.ids.ftp, Ev::FtpWake { session: s })?;
            }
        }
        Ok(())
    }

    fn page_done(&mut self, s: u32, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let now = ctx.now();
        let sess = &mut self.http[s as usize];
        let plan = sess.plan.take().expect("page in progress");
        let start = sess.page_start;
        let user = self.conns[sess.conn as usize].user;
        self.record(SessionKind::Page, user, start, now, now.saturating_since(start).as_secs_f64());
        ctx.schedule_in(secs(plan.reading), self.ids.http, Ev::HttpWake { session: s })?;
        Ok(())
    }

    fn on_parsing_done(&mut self, s: u32, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let sess = &mut self.http[s as usize];
        let Some(plan) = sess.plan.as_ref() else {
            return Ok(());
        };
        match plan.embedded.first().copied() {
            Some(first) => {
                sess.object = 1;
                let conn = sess.conn;
                self.fetch(conn, first, ctx)
            }
            None => self.page_done(s, ctx),
        }
    }

    /// A transfer was abandoned; its page or file is not recorded.
    fn abort(&mut self, c: u32, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        self.counters.aborted_transfers += 1;
        let owner = self.conns[c as usize].owner;
        log::debug!("transfer on connection {c} aborted at {}", ctx.now());
        self.reset_conn(c);
        match owner {
            Owner::Http(s) => {
                let plan = self.http[s as usize].plan.take();
                let reading = plan.map_or(0.0, |p| p.reading);
                ctx.schedule_in(secs(reading), self.ids.http, Ev::HttpWake { session: s })?;
            }
            Owner::Ftp(s) => {
                let reading = self.ftp[s as usize].reading;
                ctx.schedule_in(secs(reading), self.ids.ftp, Ev::FtpWake { session: s })?;
            }
        }
        Ok(())
    }

    // ---- server side ----

    fn transmit(&mut self, c: u32, segs: Vec<Segment>, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let now = ctx.now();
        let conn = &self.conns[c as usize];
        let (user, epoch) = (conn.user, conn.epoch);
        for s in segs {
            self.counters.segments += 1;
            if s.retransmit {
                self.counters.retransmits += 1;
            }
            let bytes = s.len + OVERHEAD;
            match self.net.send_down(now, user, bytes) {
                Downstream::Delivered(at) => {
                    ctx.schedule_at(at, self.ids.tcp, Ev::Segment { conn: c, epoch, seq: s.seq, len: s.len })?;
                }
                Downstream::Dropped => {}
                Downstream::AtOlt(at) => {
                    let pkt = Pkt::Data { conn: c, epoch, seq: s.seq, len: s.len };
                    ctx.schedule_at(at, self.ids.net, Ev::OltArrival { user: user as u32, bytes, pkt })?;
                }
            }
        }
        self.arm_timer(c, ctx)
    }

    fn arm_timer(&mut self, c: u32, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let conn = &mut self.conns[c as usize];
        if let Some(d) = conn.sender.deadline() {
            if conn.timer_at.is_none_or(|t| t > d) {
                conn.timer_at = Some(d);
                ctx.schedule_at(d, self.ids.tcp, Ev::Timer { conn: c, epoch: conn.epoch })?;
            }
        }
        Ok(())
    }

    fn on_request(&mut self, c: u32, response: u64, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let segs = self.conns[c as usize].sender.write(ctx.now(), response);
        self.transmit(c, segs, ctx)
    }

    fn on_ack(&mut self, c: u32, ack: u64, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let segs = self.conns[c as usize].sender.on_ack(ctx.now(), ack);
        self.transmit(c, segs, ctx)
    }

    fn on_timer(&mut self, c: u32, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let now = ctx.now();
        let conn = &mut self.conns[c as usize];
        if conn.timer_at == Some(now) {
            conn.timer_at = None;
        }
        let before = conn.sender.stats().timeouts;
        match conn.sender.on_timer(now) {
            Ok(segs) => {
                self.counters.timeouts += conn.sender.stats().timeouts - before;
                self.transmit(c, segs, ctx)
            }
            Err(_) => {
                self.counters.timeouts += 1;
                self.abort(c, ctx)
            }
        }
    }

    // ---- network ----

    fn on_olt_arrival(&mut self, user: u32, bytes: u32, pkt: Pkt, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        match self.net.olt_arrival(ctx.now(), user as usize, bytes, pkt) {
            Ok(started) => self.schedule_tx(started, ctx),
            Err(pkt) => {
                self.packet_lost(pkt);
                Ok(())
            }
        }
    }

    fn schedule_tx(&mut self, started: Vec<Assignment<(usize, Pkt)>>, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        for a in started {
            ctx.schedule_at(a.end, self.ids.net, Ev::TxDone { tx: a.tx as u32 })?;
        }
        Ok(())
    }

    fn on_tx_done(&mut self, tx: u32, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let done = self.net.tx_done(ctx.now(), tx as usize);
        self.schedule_tx(done.started, ctx)?;
        match (done.delivered_at, done.item) {
            (None, pkt) => self.packet_lost(pkt),
            (Some(at), Pkt::Data { conn, epoch, seq, len }) => {
                ctx.schedule_at(at, self.ids.tcp, Ev::Segment { conn, epoch, seq, len })?;
            }
            (Some(_), Pkt::Video { session, frame }) => {
                let v = &mut self.video[session as usize];
                v.sink.fragment_arrived(frame);
                self.drain_video(session, ctx.now());
            }
        }
        Ok(())
    }

    fn packet_lost(&mut self, pkt: Pkt) {
        if let Pkt::Video { session, frame } = pkt {
            self.counters.video_fragments_lost += 1;
            self.video[session as usize].sink.fragment_lost(frame);
        }
    }

    // ---- video ----

    fn on_video_frame(&mut self, s: u32, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let now = ctx.now();
        let v = &mut self.video[s as usize];
        let frame = v.source.advance();
        let user = v.user;
        let seq = v.sink.push_frame(frame.kind, fragment_count(frame.size), now);
        for d in fragment(frame.size) {
            debug_assert!(d.payload <= MAX_PAYLOAD);
            self.counters.video_fragments += 1;
            match self.net.send_down(now, user, d.wire_size()) {
                Downstream::Delivered(_) => self.video[s as usize].sink.fragment_arrived(seq),
                Downstream::Dropped => {
                    self.counters.video_fragments_lost += 1;
                    self.video[s as usize].sink.fragment_lost(seq);
                }
                Downstream::AtOlt(at) => {
                    let pkt = Pkt::Video { session: s, frame: seq };
                    ctx.schedule_at(at, self.ids.net, Ev::OltArrival { user: user as u32, bytes: d.wire_size(), pkt })?;
                }
            }
        }
        self.drain_video(s, now);
        let next = self.video[s as usize].source.next_time();
        ctx.schedule_at(next, self.ids.video, Ev::VideoFrame { session: s })?;
        Ok(())
    }

    fn drain_video(&mut self, s: u32, now: SimTime) {
        let v = &mut self.video[s as usize];
        let user = v.user;
        for g in v.sink.drain() {
            self.record(SessionKind::VideoGop, user, g.start, now.max(g.start), g.dfr);
        }
    }

    // ---- session wake-ups ----

    fn on_http_wake(&mut self, s: u32, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let sess = &mut self.http[s as usize];
        let plan = self.http_model.draw_page(&mut sess.rng);
        let html = plan.html;
        sess.plan = Some(plan);
        sess.object = 0;
        sess.page_start = ctx.now();
        let conn = sess.conn;
        self.fetch(conn, html, ctx)
    }

    fn on_ftp_wake(&mut self, s: u32, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        let sess = &mut self.ftp[s as usize];
        let plan = self.ftp_model.draw_file(&mut sess.rng);
        sess.file_bytes = plan.fetch.response;
        sess.reading = plan.reading;
        sess.start = ctx.now();
        let conn = sess.conn;
        self.reset_conn(conn);
        self.fetch(conn, plan.fetch, ctx)
    }

    fn live(&self, c: u32, epoch: u32) -> bool {
        self.conns[c as usize].epoch == epoch
    }
}

impl Model for Testbed {
    type Event = Ev;

    fn handle(&mut self, ev: SimEvent<Ev>, ctx: &mut Context<'_, Ev>) -> Result<(), HandlerError> {
        match ev.payload {
            Ev::OltArrival { user, bytes, pkt } => self.on_olt_arrival(user, bytes, pkt, ctx),
            Ev::TxDone { tx } => self.on_tx_done(tx, ctx),
            Ev::Segment { conn, epoch, seq, len } if self.live(conn, epoch) => self.on_segment(conn, seq, len, ctx),
            Ev::Ack { conn, epoch, ack } if self.live(conn, epoch) => self.on_ack(conn, ack, ctx),
            Ev::Request { conn, epoch, response } if self.live(conn, epoch) => self.on_request(conn, response, ctx),
            Ev::Timer { conn, epoch } if self.live(conn, epoch) => self.on_timer(conn, ctx),
            Ev::Syn { conn, epoch } if self.live(conn, epoch) => {
                let c = &self.conns[conn as usize];
                match self.net.send_down(ctx.now(), c.user, OVERHEAD) {
                    Downstream::Delivered(at) => {
                        ctx.schedule_at(at, self.ids.tcp, Ev::SynAck { conn, epoch })?;
                    }
                    // control packets bypass the OLT queues; a lost SYN-ACK is retried by the client
                    Downstream::AtOlt(at) => {
                        ctx.schedule_at(at, self.ids.tcp, Ev::SynAck { conn, epoch })?;
                    }
                    Downstream::Dropped => {}
                }
                Ok(())
            }
            Ev::SynAck { conn, epoch } if self.live(conn, epoch) => {
                let c = &mut self.conns[conn as usize];
                if c.established {
                    return Ok(());
                }
                c.established = true;
                match c.pending.take() {
                    Some(f) => self.fetch(conn, f, ctx),
                    None => Ok(()),
                }
            }
            Ev::SynRetry { conn, epoch } if self.live(conn, epoch) => {
                let c = &self.conns[conn as usize];
                if c.established {
                    return Ok(());
                }
                if c.syn_tries > self.cfg.max_retries {
                    return self.abort(conn, ctx);
                }
                self.send_syn(conn, ctx)
            }
            Ev::HttpWake { session } => self.on_http_wake(session, ctx),
            Ev::ParsingDone { session } => self.on_parsing_done(session, ctx),
            Ev::FtpWake { session } => self.on_ftp_wake(session, ctx),
            Ev::VideoFrame { session } => self.on_video_frame(session, ctx),
            // stale connection epoch
            _ => Ok(()),
        }
    }
}
