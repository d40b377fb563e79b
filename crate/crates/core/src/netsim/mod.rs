//! Deterministic discrete-event network simulator.
//!
//! Every flow gets a private path: a droptail bottleneck, i.i.d. random
//! loss, propagation delay and optional jitter on the data direction, and a
//! lossless fixed-delay return path carrying one ack per data packet. Jitter
//! is added after the bottleneck and clamped so the path never reorders.
//!
//! Congestion control is delegated to a [`CongestionHost`], which sees the
//! same hooks a kernel stack would give a CC module: allowance queries,
//! transmissions, acks and timeouts.

mod flow;
mod link;
mod report;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cc::{AlgorithmId, CcEvent, CcState};
use crate::switcher::SwitchRecord;

pub use flow::{FlowSpec, TransferSize, DUP_THRESH, INITIAL_RTO, MAX_RTO, MIN_RTO};
pub use link::{sample_jitter, JitterKind, JitterSpec, LinkSpec};
pub use report::{
    FlowReport, PipeCounters, SimReport, TraceEvent, TraceMode, TraceRow, GOODPUT_BIN,
};

use flow::Sender;
use link::Bottleneck;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FlowId(pub u32);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid link: {0}")]
    InvalidLink(&'static str),
    #[error("invalid jitter spec {0:?}")]
    InvalidJitter(JitterSpec),
    #[error("invalid flow {0}: {1}")]
    InvalidFlow(FlowId, &'static str),
    #[error("flow {0} refers to missing link {1}")]
    UnknownLink(FlowId, usize),
    #[error("duplicate flow id {0}")]
    DuplicateFlow(FlowId),
}

/// What an ack tells the congestion controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AckInfo {
    pub now: f64,
    pub rtt: f64,
    pub acked_bytes: u64,
    pub delivery_rate: f64,
    /// First loss of a new episode was detected on this ack.
    pub loss_detected: bool,
    pub round_end: bool,
    pub cumulative_retransmits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtoInfo {
    pub now: f64,
    pub cumulative_retransmits: u64,
}

/// Bytes the host lets a flow send now, and when pacing will next allow it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allowance {
    pub bytes: u64,
    pub retry_at: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSnapshot {
    pub cwnd: f64,
    pub pacing_rate: Option<f64>,
    pub srtt: Option<f64>,
}

/// The transport's view of congestion control. `idx` is the flow's
/// position in the simulator's flow list.
pub trait CongestionHost {
    fn open_flow(&mut self, idx: usize, spec: &FlowSpec, now: f64);
    fn allowance(&mut self, idx: usize, in_flight: u64, next_bytes: u64, now: f64) -> Allowance;
    fn on_transmit(&mut self, idx: usize, bytes: u64, now: f64);
    fn on_ack(&mut self, idx: usize, ack: &AckInfo) -> Option<SwitchRecord>;
    fn on_rto(&mut self, idx: usize, rto: &RtoInfo) -> Option<SwitchRecord>;
    fn snapshot(&self, idx: usize) -> RateSnapshot;
    fn history(&self, _idx: usize) -> Vec<AlgorithmId> {
        Vec::new()
    }
    fn on_flow_done(&mut self, _idx: usize, _now: f64) {}
    /// Periodic drain timer, when [`SimConfig::tick_period`] is set.
    fn on_tick(&mut self, _now: f64) {}
    /// Fires timers scheduled with [`Timer::Host`].
    fn on_timer(&mut self, _token: u64, _now: f64) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timer {
    Start,
    Rto,
    Pacing,
    Host(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// Leaves the bottleneck after serialization.
    PktDeparture { flow: usize, tx_id: u64, bytes: u32 },
    /// Reaches the receiver.
    PktArrival { flow: usize, tx_id: u64 },
    AckArrival { flow: usize, tx_id: u64 },
    TimerFire { flow: Option<usize>, timer: Timer },
    SelectorDrain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    // Reversed so the max-heap pops the earliest (time, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    next_seq: u64,
    now: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        EventQueue::default()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// # Panics
    /// If `time` is earlier than the current clock.
    pub fn schedule(&mut self, time: f64, kind: EventKind) -> u64 {
        assert!(
            time >= self.now,
            "event scheduled in the past ({time} < {})",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(SimEvent { time, seq, kind });
        seq
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }

    /// Removes the next event and advances the clock to it.
    pub fn pop(&mut self) -> Option<SimEvent> {
        let ev = self.heap.pop()?;
        debug_assert!(ev.time >= self.now);
        self.now = ev.time;
        Some(ev)
    }

    pub fn advance_to(&mut self, t: f64) {
        self.now = self.now.max(t);
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub trace: TraceMode,
    /// Period of [`EventKind::SelectorDrain`], if any.
    pub tick_period: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            trace: TraceMode::Full,
            tick_period: None,
        }
    }
}

/// Seed of one flow's random stream; independent of how flows are grouped.
pub fn flow_seed(seed: u64, flow: FlowId) -> u64 {
    seed ^ (flow.0 as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug)]
struct FlowRt {
    spec: FlowSpec,
    link: LinkSpec,
    bottleneck: Bottleneck,
    rng: ChaCha8Rng,
    sender: Sender,
    last_arrival: f64,
    opened: bool,
    done_at: Option<f64>,
    rto_deadline: Option<f64>,
    rto_event_pending: bool,
    pacing_at: Option<f64>,
    sent_pkts: u64,
    delivered_pkts: u64,
    dropped_queue: u64,
    dropped_random: u64,
    in_network: u64,
    bins: Vec<u64>,
}

impl FlowRt {
    fn active(&self) -> bool {
        self.opened && self.done_at.is_none()
    }
}

pub struct Simulator<H> {
    queue: EventQueue,
    flows: Vec<FlowRt>,
    host: H,
    cfg: SimConfig,
    trace: Vec<TraceRow>,
    switches: Vec<SwitchRecord>,
    dispatched: u64,
    pending_bounded: usize,
    has_unbounded: bool,
}

impl<H: CongestionHost> Simulator<H> {
    pub fn new(
        links: &[LinkSpec],
        flows: Vec<FlowSpec>,
        host: H,
        cfg: SimConfig,
    ) -> Result<Self, SimError> {
        for l in links {
            l.validate()?;
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut rts = Vec::with_capacity(flows.len());
        for spec in flows {
            spec.validate()?;
            if !seen.insert(spec.flow_id) {
                return Err(SimError::DuplicateFlow(spec.flow_id));
            }
            let link = *links
                .get(spec.link)
                .ok_or(SimError::UnknownLink(spec.flow_id, spec.link))?;
            rts.push(FlowRt {
                bottleneck: Bottleneck::new(link.queue_capacity),
                rng: ChaCha8Rng::seed_from_u64(flow_seed(cfg.seed, spec.flow_id)),
                sender: Sender::new(&spec),
                link,
                spec,
                last_arrival: 0.0,
                opened: false,
                done_at: None,
                rto_deadline: None,
                rto_event_pending: false,
                pacing_at: None,
                sent_pkts: 0,
                delivered_pkts: 0,
                dropped_queue: 0,
                dropped_random: 0,
                in_network: 0,
                bins: Vec::new(),
            });
        }
        let mut sim = Simulator {
            queue: EventQueue::new(),
            pending_bounded: rts
                .iter()
                .filter(|f| f.spec.transfer_size != TransferSize::Unbounded)
                .count(),
            has_unbounded: rts
                .iter()
                .any(|f| f.spec.transfer_size == TransferSize::Unbounded),
            flows: rts,
            host,
            cfg,
            trace: Vec::new(),
            switches: Vec::new(),
            dispatched: 0,
        };
        for i in 0..sim.flows.len() {
            let t = sim.flows[i].spec.start_time;
            sim.queue.schedule(
                t,
                EventKind::TimerFire {
                    flow: Some(i),
                    timer: Timer::Start,
                },
            );
        }
        if let Some(p) = cfg.tick_period {
            assert!(p > 0.0, "tick period must be positive");
            sim.queue.schedule(p, EventKind::SelectorDrain);
        }
        Ok(sim)
    }

    pub fn now(&self) -> f64 {
        self.queue.now()
    }

    pub fn host(&self) -> &H {
        &self.host
    }

    pub fn host_mut(&mut self) -> &mut H {
        &mut self.host
    }

    pub fn into_host(self) -> H {
        self.host
    }

    /// Enqueues an arbitrary event. Panics if `time` is in the past.
    pub fn schedule(&mut self, time: f64, kind: EventKind) -> u64 {
        self.queue.schedule(time, kind)
    }

    /// Schedules a [`Timer::Host`] callback.
    pub fn schedule_host_timer(&mut self, time: f64, token: u64) {
        self.queue.schedule(
            time,
            EventKind::TimerFire {
                flow: None,
                timer: Timer::Host(token),
            },
        );
    }

    /// Dispatches every event with `time <= t_end`, then stops the clock at
    /// `t_end`.
    pub fn run_until(&mut self, t_end: f64) -> SimReport {
        assert!(t_end >= self.queue.now(), "t_end is in the past");
        while self.queue.peek_time().is_some_and(|t| t <= t_end) {
            let ev = self.queue.pop().expect("peeked");
            self.dispatched += 1;
            self.dispatch(ev);
        }
        self.queue.advance_to(t_end);
        self.report(t_end)
    }

    fn all_done(&self) -> bool {
        !self.has_unbounded && self.pending_bounded == 0
    }

    fn dispatch(&mut self, ev: SimEvent) {
        let now = ev.time;
        match ev.kind {
            EventKind::TimerFire { flow: Some(i), timer } => match timer {
                Timer::Start => {
                    let f = &mut self.flows[i];
                    f.opened = true;
                    self.host.open_flow(i, &f.spec, now);
                    self.try_send(i, now);
                }
                Timer::Rto => self.on_rto_timer(i, now),
                Timer::Pacing => {
                    if self.flows[i].pacing_at.is_some_and(|t| t <= now) {
                        self.flows[i].pacing_at = None;
                        self.try_send(i, now);
                    }
                }
                Timer::Host(token) => self.host.on_timer(token, now),
            },
            EventKind::TimerFire { flow: None, timer } => {
                if let Timer::Host(token) = timer {
                    self.host.on_timer(token, now);
                }
            }
            EventKind::PktDeparture { flow, tx_id, bytes } => {
                let _ = bytes;
                let f = &mut self.flows[flow];
                if f.rng.gen::<f64>() < f.link.loss_ratio {
                    f.dropped_random += 1;
                    f.in_network -= 1;
                    return;
                }
                let jitter = sample_jitter(&f.link.jitter, &mut f.rng);
                let arrival = (now + f.link.prop_delay + jitter).max(f.last_arrival);
                f.last_arrival = arrival;
                self.queue
                    .schedule(arrival, EventKind::PktArrival { flow, tx_id });
            }
            EventKind::PktArrival { flow, tx_id } => {
                let f = &mut self.flows[flow];
                f.delivered_pkts += 1;
                f.in_network -= 1;
                let back = now + f.link.prop_delay;
                self.queue
                    .schedule(back, EventKind::AckArrival { flow, tx_id });
            }
            EventKind::AckArrival { flow, tx_id } => self.on_ack(flow, tx_id, now),
            EventKind::SelectorDrain => {
                self.host.on_tick(now);
                if !self.all_done() {
                    let p = self.cfg.tick_period.expect("drain without period");
                    self.queue.schedule(now + p, EventKind::SelectorDrain);
                }
            }
        }
    }

    fn record(&mut self, idx: usize, now: f64, acked_bytes: u64, event: TraceEvent) {
        if self.cfg.trace == TraceMode::Summary && event == TraceEvent::Ack {
            return;
        }
        let snap = self.host.snapshot(idx);
        self.trace.push(TraceRow {
            time: now,
            flow_id: self.flows[idx].spec.flow_id,
            cwnd_pkts: snap.cwnd,
            pacing_rate: snap.pacing_rate,
            srtt: snap.srtt,
            acked_bytes,
            event,
        });
    }

    fn record_switch(&mut self, idx: usize, sw: SwitchRecord) {
        let snap = self.host.snapshot(idx);
        self.trace.push(TraceRow {
            time: sw.time,
            flow_id: sw.flow_id,
            cwnd_pkts: sw.cwnd_after,
            pacing_rate: snap.pacing_rate,
            srtt: snap.srtt,
            acked_bytes: 0,
            event: TraceEvent::Switch,
        });
        self.switches.push(sw);
    }

    fn on_ack(&mut self, idx: usize, tx_id: u64, now: f64) {
        if !self.flows[idx].active() {
            return;
        }
        let Some(out) = self.flows[idx].sender.on_ack(tx_id, now) else {
            return;
        };
        let f = &mut self.flows[idx];
        if out.new_bytes > 0 {
            let bin = (now / GOODPUT_BIN) as usize;
            if f.bins.len() <= bin {
                f.bins.resize(bin + 1, 0);
            }
            f.bins[bin] += out.new_bytes;
        }
        let info = AckInfo {
            now,
            rtt: out.rtt,
            acked_bytes: out.new_bytes,
            delivery_rate: out.delivery_rate,
            loss_detected: out.loss_detected,
            round_end: out.round_end,
            cumulative_retransmits: f.sender.cumulative_retransmits,
        };
        if let Some(sw) = self.host.on_ack(idx, &info) {
            self.record_switch(idx, sw);
        }
        let ev = if out.loss_detected {
            TraceEvent::Loss
        } else {
            TraceEvent::Ack
        };
        self.record(idx, now, out.new_bytes, ev);

        if out.completed {
            let f = &mut self.flows[idx];
            f.done_at = Some(now);
            f.rto_deadline = None;
            self.pending_bounded -= 1;
            self.host.on_flow_done(idx, now);
            return;
        }
        self.rearm_rto(idx, now);
        self.try_send(idx, now);
    }

    fn rearm_rto(&mut self, idx: usize, now: f64) {
        let f = &mut self.flows[idx];
        if !f.sender.has_outstanding() {
            f.rto_deadline = None;
            return;
        }
        let deadline = now + f.sender.rto();
        f.rto_deadline = Some(deadline);
        if !f.rto_event_pending {
            f.rto_event_pending = true;
            self.queue.schedule(
                deadline,
                EventKind::TimerFire {
                    flow: Some(idx),
                    timer: Timer::Rto,
                },
            );
        }
    }

    fn on_rto_timer(&mut self, idx: usize, now: f64) {
        let f = &mut self.flows[idx];
        f.rto_event_pending = false;
        if !f.active() {
            return;
        }
        match f.rto_deadline {
            None => {}
            Some(d) if d > now => {
                f.rto_event_pending = true;
                self.queue.schedule(
                    d,
                    EventKind::TimerFire {
                        flow: Some(idx),
                        timer: Timer::Rto,
                    },
                );
            }
            Some(_) => {
                f.rto_deadline = None;
                f.sender.on_rto();
                let info = RtoInfo {
                    now,
                    cumulative_retransmits: f.sender.cumulative_retransmits,
                };
                log::trace!("flow {} rto at {now:.4}", f.spec.flow_id);
                if let Some(sw) = self.host.on_rto(idx, &info) {
                    self.record_switch(idx, sw);
                }
                self.record(idx, now, 0, TraceEvent::Rto);
                self.try_send(idx, now);
                // Retransmissions may all have been blocked; keep a timer
                // running while anything is owed.
                if self.flows[idx].rto_deadline.is_none() {
                    self.rearm_rto(idx, now);
                }
            }
        }
    }

    fn try_send(&mut self, idx: usize, now: f64) {
        loop {
            let f = &mut self.flows[idx];
            if !f.active() {
                return;
            }
            let Some((seq, bytes)) = f.sender.peek_next() else {
                return;
            };
            let in_flight = f.sender.in_flight;
            let allow = self.host.allowance(idx, in_flight, bytes as u64, now);
            if allow.bytes < bytes as u64 {
                if let Some(t) = allow.retry_at {
                    self.arm_pacing(idx, t.max(now + 1e-9));
                }
                return;
            }
            let f = &mut self.flows[idx];
            let rec = f.sender.on_send(seq, now);
            f.sent_pkts += 1;
            self.host.on_transmit(idx, bytes as u64, now);
            let f = &mut self.flows[idx];
            match f.bottleneck.enqueue(now, f.link.serialization(bytes as u64)) {
                Some(depart) => {
                    f.in_network += 1;
                    self.queue.schedule(
                        depart,
                        EventKind::PktDeparture {
                            flow: idx,
                            tx_id: rec.tx_id,
                            bytes,
                        },
                    );
                }
                None => f.dropped_queue += 1,
            }
            if self.flows[idx].rto_deadline.is_none() {
                self.rearm_rto(idx, now);
            }
        }
    }

    fn arm_pacing(&mut self, idx: usize, at: f64) {
        let f = &mut self.flows[idx];
        if f.pacing_at.is_some_and(|t| t <= at) {
            return;
        }
        f.pacing_at = Some(at);
        self.queue.schedule(
            at,
            EventKind::TimerFire {
                flow: Some(idx),
                timer: Timer::Pacing,
            },
        );
    }

    fn report(&self, t_end: f64) -> SimReport {
        let flows = self
            .flows
            .iter()
            .enumerate()
            .map(|(i, f)| FlowReport {
                flow_id: f.spec.flow_id,
                group: f.spec.group.clone(),
                start_time: f.spec.start_time,
                transfer_size: f.spec.transfer_size,
                fct: f.done_at.map(|t| t - f.spec.start_time),
                bytes_acked: f.sender.acked_bytes_total(),
                sent_pkts: f.sent_pkts,
                delivered_pkts: f.delivered_pkts,
                dropped_queue: f.dropped_queue,
                dropped_random: f.dropped_random,
                in_network: f.in_network,
                retransmits: f.sender.cumulative_retransmits,
                rto_count: f.sender.rto_count,
                goodput_bins: f.bins.clone(),
                algorithm_history: self.host.history(i),
            })
            .collect();
        SimReport {
            duration: t_end,
            flows,
            trace: self.trace.clone(),
            switches: self.switches.clone(),
            pipes: Vec::new(),
            events_dispatched: self.dispatched,
        }
    }

    /// Whether the flow at `idx` has acked its whole transfer.
    pub fn flow_complete(&self, idx: usize) -> bool {
        self.flows[idx].sender.is_complete()
    }
}

/// Runs each flow's [`CcState`] directly, with no agent, pipes or selector.
#[derive(Debug, Default)]
pub struct DirectHost {
    states: Vec<Option<CcState>>,
}

impl DirectHost {
    pub fn new() -> Self {
        DirectHost::default()
    }

    pub fn state(&self, idx: usize) -> Option<&CcState> {
        self.states.get(idx).and_then(|s| s.as_ref())
    }

    fn cc(&mut self, idx: usize) -> &mut CcState {
        self.states[idx].as_mut().expect("flow not open")
    }
}

impl CongestionHost for DirectHost {
    fn open_flow(&mut self, idx: usize, spec: &FlowSpec, now: f64) {
        if self.states.len() <= idx {
            self.states.resize(idx + 1, None);
        }
        self.states[idx] = Some(CcState::init(spec.initial_algorithm, now, spec.mss));
    }

    fn allowance(&mut self, idx: usize, in_flight: u64, next_bytes: u64, now: f64) -> Allowance {
        let cc = self.cc(idx);
        Allowance {
            bytes: cc.sending_allowance(in_flight, now),
            retry_at: cc.next_send_time(in_flight, next_bytes, now),
        }
    }

    fn on_transmit(&mut self, idx: usize, bytes: u64, now: f64) {
        self.cc(idx).on_sent(bytes, now);
    }

    fn on_ack(&mut self, idx: usize, ack: &AckInfo) -> Option<SwitchRecord> {
        let cc = self.cc(idx);
        cc.on_event(&CcEvent::ack(
            ack.now,
            ack.acked_bytes,
            ack.rtt,
            ack.delivery_rate,
        ));
        if ack.loss_detected {
            cc.on_event(&CcEvent::loss(ack.now));
        }
        if ack.round_end {
            cc.on_event(&CcEvent::round_end(ack.now));
        }
        None
    }

    fn on_rto(&mut self, idx: usize, rto: &RtoInfo) -> Option<SwitchRecord> {
        self.cc(idx).on_event(&CcEvent::rto(rto.now));
        None
    }

    fn snapshot(&self, idx: usize) -> RateSnapshot {
        let s = self.state(idx).expect("flow not open");
        RateSnapshot {
            cwnd: s.rate.cwnd,
            pacing_rate: s.rate.pacing_rate,
            srtt: s.rate.srtt,
        }
    }

    fn history(&self, idx: usize) -> Vec<AlgorithmId> {
        self.state(idx).map(|s| vec![s.id()]).unwrap_or_default()
    }
}
