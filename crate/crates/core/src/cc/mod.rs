//! Pluggable congestion-control algorithms sharing one state machine.
//!
//! Every algorithm owns the same rate variables ([`RateVars`]) and moves
//! through the same phases ([`Phase`]); what differs is the set of observed
//! variables each one keeps ([`Observed`]) and how it turns events into rate
//! adjustments. Replacing an algorithm therefore only swaps the observed half
//! of a [`CcState`], which is what the switcher relies on.

mod bbr;
mod cubic;
mod vegas;
mod westwood;

use std::fmt;
use std::str::FromStr;

pub use bbr::BbrVars;
pub use cubic::CubicVars;
pub use vegas::VegasVars;
pub use westwood::WestwoodVars;

/// Initial congestion window, in packets, for every algorithm.
pub const INITIAL_CWND: f64 = 10.0;
/// Lower bound enforced on cwnd after every update.
pub const MIN_CWND: f64 = 1.0;
/// Slow-start threshold before the first loss.
pub const SSTHRESH_INFINITE: f64 = f64::INFINITY;
pub const DEFAULT_MSS: u32 = 1500;

/// Pacing token bucket depth, in packets.
const PACER_BURST_PKTS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmId {
    Cubic,
    Westwood,
    Vegas,
    BbrLite,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 4] = [
        AlgorithmId::Cubic,
        AlgorithmId::Westwood,
        AlgorithmId::Vegas,
        AlgorithmId::BbrLite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::Cubic => "cubic",
            AlgorithmId::Westwood => "westwood",
            AlgorithmId::Vegas => "vegas",
            AlgorithmId::BbrLite => "bbr_lite",
        }
    }

    /// Whether the algorithm drives a pacing rate rather than a bare window.
    pub fn is_pacing(self) -> bool {
        matches!(self, AlgorithmId::BbrLite)
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown congestion control algorithm `{0}`")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for AlgorithmId {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cubic" => Ok(AlgorithmId::Cubic),
            "westwood" => Ok(AlgorithmId::Westwood),
            "vegas" => Ok(AlgorithmId::Vegas),
            "bbr_lite" | "bbr-lite" | "bbr" => Ok(AlgorithmId::BbrLite),
            _ => Err(UnknownAlgorithm(s.to_string())),
        }
    }
}

/// The sending-rate variables every algorithm shares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateVars {
    /// Congestion window in packets; fractional internally.
    pub cwnd: f64,
    /// Slow-start threshold in packets.
    pub ssthresh: f64,
    /// Bytes per second; present only for pacing-based algorithms.
    pub pacing_rate: Option<f64>,
    pub srtt: Option<f64>,
    pub last_rtt_sample: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    SlowStart,
    CongestionAvoidance,
    LossRecovery,
}

impl Phase {
    /// Legal edges of the shared state machine. Staying put is always legal.
    pub fn can_transition_to(self, next: Phase) -> bool {
        use Phase::*;
        self == next
            || matches!(
                (self, next),
                (SlowStart, CongestionAvoidance)
                    | (SlowStart, LossRecovery)
                    | (CongestionAvoidance, LossRecovery)
                    | (LossRecovery, CongestionAvoidance)
            )
    }
}

fn enter(phase: &mut Phase, next: Phase) {
    debug_assert!(
        phase.can_transition_to(next),
        "illegal phase transition {phase:?} -> {next:?}"
    );
    *phase = next;
}

/// Per-algorithm measurement state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observed {
    Cubic(CubicVars),
    Westwood(WestwoodVars),
    Vegas(VegasVars),
    BbrLite(BbrVars),
}

impl Observed {
    pub fn id(&self) -> AlgorithmId {
        match self {
            Observed::Cubic(_) => AlgorithmId::Cubic,
            Observed::Westwood(_) => AlgorithmId::Westwood,
            Observed::Vegas(_) => AlgorithmId::Vegas,
            Observed::BbrLite(_) => AlgorithmId::BbrLite,
        }
    }

    /// Default observed variables, as set by the algorithm's own init.
    pub fn defaults(id: AlgorithmId, now: f64) -> Observed {
        match id {
            AlgorithmId::Cubic => Observed::Cubic(CubicVars::default()),
            AlgorithmId::Westwood => Observed::Westwood(WestwoodVars::new(now)),
            AlgorithmId::Vegas => Observed::Vegas(VegasVars::default()),
            AlgorithmId::BbrLite => Observed::BbrLite(BbrVars::new(now)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcEventKind {
    Ack,
    LossDetected,
    RtoFired,
    RoundEnd,
}

/// One input to an algorithm. `rtt_sample` and `delivery_rate` are only
/// meaningful for acks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcEvent {
    pub kind: CcEventKind,
    pub acked_bytes: u64,
    pub rtt_sample: f64,
    /// Bytes/second delivered over the sample's round trip.
    pub delivery_rate: f64,
    pub now: f64,
}

impl CcEvent {
    pub fn ack(now: f64, acked_bytes: u64, rtt_sample: f64, delivery_rate: f64) -> Self {
        debug_assert!(rtt_sample > 0.0);
        CcEvent {
            kind: CcEventKind::Ack,
            acked_bytes,
            rtt_sample,
            delivery_rate,
            now,
        }
    }

    fn signal(kind: CcEventKind, now: f64) -> Self {
        CcEvent {
            kind,
            acked_bytes: 0,
            rtt_sample: 0.0,
            delivery_rate: 0.0,
            now,
        }
    }

    pub fn loss(now: f64) -> Self {
        Self::signal(CcEventKind::LossDetected, now)
    }

    pub fn rto(now: f64) -> Self {
        Self::signal(CcEventKind::RtoFired, now)
    }

    pub fn round_end(now: f64) -> Self {
        Self::signal(CcEventKind::RoundEnd, now)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pacer {
    tokens: f64,
    updated_at: f64,
}

impl Pacer {
    fn accrued(&self, rate: f64, now: f64, cap: f64) -> f64 {
        let dt = (now - self.updated_at).max(0.0);
        (self.tokens + rate * dt).min(cap)
    }

    fn refill(&mut self, rate: f64, now: f64, cap: f64) {
        self.tokens = self.accrued(rate, now, cap);
        self.updated_at = self.updated_at.max(now);
    }
}

/// Congestion state of one connection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcState {
    pub rate: RateVars,
    pub phase: Phase,
    pub observed: Observed,
    pub mss: u32,
    pacer: Pacer,
}

impl CcState {
    /// Fresh state for `id`: slow start, initial window, observed defaults.
    pub fn init(id: AlgorithmId, now: f64, mss: u32) -> CcState {
        assert!(mss > 0, "mss must be positive");
        let mut state = CcState {
            rate: RateVars {
                cwnd: INITIAL_CWND,
                ssthresh: SSTHRESH_INFINITE,
                pacing_rate: None,
                srtt: None,
                last_rtt_sample: None,
            },
            phase: Phase::SlowStart,
            observed: Observed::defaults(id, now),
            mss,
            pacer: Pacer {
                tokens: 0.0,
                updated_at: now,
            },
        };
        if id.is_pacing() {
            state.rate.pacing_rate = Some(bbr::initial_pacing_rate(&state.rate, mss));
        }
        state
    }

    pub fn id(&self) -> AlgorithmId {
        self.observed.id()
    }

    fn pacer_cap(&self) -> f64 {
        PACER_BURST_PKTS * self.mss as f64
    }

    /// Feeds one event through the algorithm.
    pub fn on_event(&mut self, ev: &CcEvent) {
        if let Some(rate) = self.rate.pacing_rate {
            let cap = self.pacer_cap();
            self.pacer.refill(rate, ev.now, cap);
        }
        if ev.kind == CcEventKind::Ack {
            let rtt = ev.rtt_sample;
            self.rate.srtt = Some(match self.rate.srtt {
                Some(s) => 0.875 * s + 0.125 * rtt,
                None => rtt,
            });
            self.rate.last_rtt_sample = Some(rtt);
        }
        let ctl = Ctl {
            rate: &mut self.rate,
            phase: &mut self.phase,
            mss: self.mss as f64,
        };
        match &mut self.observed {
            Observed::Cubic(v) => cubic::on_event(v, ctl, ev),
            Observed::Westwood(v) => westwood::on_event(v, ctl, ev),
            Observed::Vegas(v) => vegas::on_event(v, ctl, ev),
            Observed::BbrLite(v) => bbr::on_event(v, ctl, ev),
        }
        if !(self.rate.cwnd >= MIN_CWND) {
            self.rate.cwnd = MIN_CWND;
        }
    }

    fn window_headroom(&self, in_flight: u64) -> u64 {
        let window = self.rate.cwnd.floor() as u64 * self.mss as u64;
        window.saturating_sub(in_flight)
    }

    /// Bytes the connection may put on the wire at `now`.
    pub fn sending_allowance(&self, in_flight: u64, now: f64) -> u64 {
        let window = self.window_headroom(in_flight);
        match self.rate.pacing_rate {
            None => window,
            Some(rate) => {
                let tokens = self.pacer.accrued(rate, now, self.pacer_cap());
                window.min(tokens.floor() as u64)
            }
        }
    }

    /// Earliest time at which `bytes` become sendable, when pacing (and not
    /// the window) is what holds them back.
    pub fn next_send_time(&self, in_flight: u64, bytes: u64, now: f64) -> Option<f64> {
        let rate = self.rate.pacing_rate?;
        if self.window_headroom(in_flight) < bytes || rate <= 0.0 {
            return None;
        }
        let tokens = self.pacer.accrued(rate, now, self.pacer_cap());
        let missing = bytes as f64 - tokens.floor();
        if missing <= 0.0 {
            Some(now)
        } else {
            Some(now + missing / rate)
        }
    }

    /// Debits pacing tokens for a transmission.
    pub fn on_sent(&mut self, bytes: u64, now: f64) {
        if let Some(rate) = self.rate.pacing_rate {
            let cap = self.pacer_cap();
            self.pacer.refill(rate, now, cap);
            self.pacer.tokens = (self.pacer.tokens - bytes as f64).max(0.0);
        }
    }
}

/// The shared half of the state handed to each algorithm.
struct Ctl<'a> {
    rate: &'a mut RateVars,
    phase: &'a mut Phase,
    mss: f64,
}

impl Ctl<'_> {
    fn acked_pkts(&self, ev: &CcEvent) -> f64 {
        ev.acked_bytes as f64 / self.mss
    }

    fn enter(&mut self, next: Phase) {
        enter(self.phase, next);
    }

    /// Reno-style window growth used by the loss-based algorithms.
    fn reno_increase(&mut self, acked_pkts: f64) {
        match *self.phase {
            Phase::SlowStart => {
                self.rate.cwnd += acked_pkts;
                if self.rate.cwnd >= self.rate.ssthresh {
                    self.enter(Phase::CongestionAvoidance);
                }
            }
            Phase::CongestionAvoidance => {
                self.rate.cwnd += acked_pkts / self.rate.cwnd;
            }
            Phase::LossRecovery => {}
        }
    }

    fn leave_recovery(&mut self) {
        if *self.phase == Phase::LossRecovery {
            self.enter(Phase::CongestionAvoidance);
        }
    }
}
