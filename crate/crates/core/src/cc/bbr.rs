//! BBR-lite: a model-based sender with a startup phase and an eight-phase
//! bandwidth probing cycle. No ProbeRTT.
//!
//! The model is a windowed max of delivery-rate samples (last ten rounds)
//! and a windowed min of RTT samples (last ten seconds). Pacing follows
//! `gain · max_bw`; the window is `2 · max_bw · min_rtt`.

use super::{CcEvent, CcEventKind, Ctl, Phase, RateVars};

pub const PACING_GAIN_CYCLE: [f64; 8] = [1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
/// 2/ln 2, the smallest gain that doubles delivery each round.
pub const STARTUP_GAIN: f64 = 2.885;
const CWND_GAIN: f64 = 2.0;
const BW_WINDOW_ROUNDS: usize = 10;
const MIN_RTT_WINDOW: f64 = 10.0;
const MIN_MODEL_CWND: f64 = 4.0;
/// Startup ends after this many rounds without 25% bandwidth growth.
const FULL_BW_ROUNDS: u32 = 3;
const FULL_BW_GROWTH: f64 = 1.25;
/// Pacing placeholder before any RTT is known.
const NO_RTT_FALLBACK: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbrVars {
    /// Windowed min RTT; refreshed on acks.
    pub min_rtt: f64,
    pub min_rtt_stamp: f64,
    /// Windowed max delivery rate, bytes/second; refreshed on acks.
    pub max_bw: f64,
    pub cycle_index: usize,
    pub cycle_stamp: f64,
    pub round_count: u64,
    bw_samples: [f64; BW_WINDOW_ROUNDS],
    bw_rounds: [u64; BW_WINDOW_ROUNDS],
    pub full_bw: f64,
    pub full_bw_rounds: u32,
}

impl BbrVars {
    pub fn new(now: f64) -> Self {
        BbrVars {
            min_rtt: f64::INFINITY,
            min_rtt_stamp: now,
            max_bw: 0.0,
            cycle_index: 0,
            cycle_stamp: now,
            round_count: 0,
            bw_samples: [0.0; BW_WINDOW_ROUNDS],
            bw_rounds: [0; BW_WINDOW_ROUNDS],
            full_bw: 0.0,
            full_bw_rounds: 0,
        }
    }

    pub fn pacing_gain(&self) -> f64 {
        PACING_GAIN_CYCLE[self.cycle_index]
    }

    fn has_model(&self) -> bool {
        self.max_bw > 0.0 && self.min_rtt.is_finite()
    }

    /// Bandwidth-delay product in packets.
    pub fn bdp_pkts(&self, mss: f64) -> f64 {
        self.max_bw * self.min_rtt / mss
    }

    fn update_min_rtt(&mut self, rtt: f64, now: f64) {
        if rtt <= self.min_rtt || now - self.min_rtt_stamp > MIN_RTT_WINDOW {
            self.min_rtt = rtt;
            self.min_rtt_stamp = now;
        }
    }

    fn update_max_bw(&mut self, sample: f64) {
        let slot = (self.round_count % BW_WINDOW_ROUNDS as u64) as usize;
        if self.bw_rounds[slot] != self.round_count {
            self.bw_rounds[slot] = self.round_count;
            self.bw_samples[slot] = 0.0;
        }
        self.bw_samples[slot] = self.bw_samples[slot].max(sample);
        let oldest = self
            .round_count
            .saturating_sub(BW_WINDOW_ROUNDS as u64 - 1);
        self.max_bw = self
            .bw_samples
            .iter()
            .zip(&self.bw_rounds)
            .filter(|(_, round)| **round >= oldest && **round <= self.round_count)
            .map(|(&bw, _)| bw)
            .fold(0.0, f64::max);
    }

    fn check_full_bw(&mut self) -> bool {
        if self.max_bw >= self.full_bw * FULL_BW_GROWTH {
            self.full_bw = self.max_bw;
            self.full_bw_rounds = 0;
            return false;
        }
        self.full_bw_rounds += 1;
        self.full_bw_rounds >= FULL_BW_ROUNDS
    }

    fn apply_model(&self, rate: &mut RateVars, mss: f64, gain: f64) {
        if self.has_model() {
            rate.pacing_rate = Some(gain * self.max_bw);
            rate.cwnd = (CWND_GAIN * self.bdp_pkts(mss)).max(MIN_MODEL_CWND);
        }
    }
}

pub(super) fn initial_pacing_rate(rate: &RateVars, mss: u32) -> f64 {
    let rtt = rate.srtt.unwrap_or(NO_RTT_FALLBACK);
    STARTUP_GAIN * rate.cwnd * mss as f64 / rtt
}

pub(super) fn on_event(v: &mut BbrVars, mut ctl: Ctl<'_>, ev: &CcEvent) {
    match ev.kind {
        CcEventKind::Ack => {
            v.update_min_rtt(ev.rtt_sample, ev.now);
            if ev.delivery_rate > 0.0 {
                v.update_max_bw(ev.delivery_rate);
            }
            match *ctl.phase {
                Phase::SlowStart => {
                    let acked = ctl.acked_pkts(ev);
                    let target = if v.has_model() {
                        STARTUP_GAIN * v.bdp_pkts(ctl.mss)
                    } else {
                        f64::INFINITY
                    };
                    if ctl.rate.cwnd < target {
                        ctl.rate.cwnd = (ctl.rate.cwnd + acked).min(target);
                    }
                    if v.has_model() {
                        ctl.rate.pacing_rate = Some(STARTUP_GAIN * v.max_bw);
                    }
                }
                Phase::CongestionAvoidance => {
                    if v.min_rtt.is_finite() && ev.now - v.cycle_stamp > v.min_rtt {
                        v.cycle_index = (v.cycle_index + 1) % PACING_GAIN_CYCLE.len();
                        v.cycle_stamp = ev.now;
                    }
                    v.apply_model(ctl.rate, ctl.mss, v.pacing_gain());
                }
                Phase::LossRecovery => v.apply_model(ctl.rate, ctl.mss, 1.0),
            }
        }
        CcEventKind::RoundEnd => {
            v.round_count += 1;
            match *ctl.phase {
                Phase::SlowStart => {
                    if v.has_model() && v.check_full_bw() {
                        // Leave startup through the draining phase of the cycle.
                        v.cycle_index = 1;
                        v.cycle_stamp = ev.now;
                        ctl.enter(Phase::CongestionAvoidance);
                        v.apply_model(ctl.rate, ctl.mss, v.pacing_gain());
                    }
                }
                Phase::LossRecovery => {
                    ctl.enter(Phase::CongestionAvoidance);
                    v.cycle_stamp = ev.now;
                }
                Phase::CongestionAvoidance => {}
            }
        }
        // Random loss is not a congestion signal for the model.
        CcEventKind::LossDetected => ctl.enter(Phase::LossRecovery),
        CcEventKind::RtoFired => {
            ctl.rate.cwnd = 1.0;
            ctl.enter(Phase::LossRecovery);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::{AlgorithmId, CcState, Observed};

    fn vars(s: &CcState) -> BbrVars {
        match s.observed {
            Observed::BbrLite(v) => v,
            _ => unreachable!(),
        }
    }

    #[test]
    fn max_bw_window_expires_after_ten_rounds() {
        let mut v = BbrVars::new(0.0);
        v.update_max_bw(500.0);
        for r in 1..=9 {
            v.round_count = r;
            v.update_max_bw(100.0);
            assert_eq!(v.max_bw, 500.0, "round {r}");
        }
        v.round_count = 10;
        v.update_max_bw(100.0);
        assert_eq!(v.max_bw, 100.0);
    }

    #[test]
    fn min_rtt_expires_after_window() {
        let mut v = BbrVars::new(0.0);
        v.update_min_rtt(0.03, 0.0);
        v.update_min_rtt(0.05, 5.0);
        assert_eq!(v.min_rtt, 0.03);
        v.update_min_rtt(0.05, 10.5);
        assert_eq!(v.min_rtt, 0.05);
    }

    #[test]
    fn probe_bw_follows_model() {
        let mut s = CcState::init(AlgorithmId::BbrLite, 0.0, 1500);
        s.phase = Phase::CongestionAvoidance;
        s.on_event(&CcEvent::ack(0.03, 1500, 0.03, 250_000.0));
        // bdp = 250000 * 0.03 / 1500 = 5 packets
        assert!((s.rate.cwnd - 10.0).abs() < 1e-9);
        assert_eq!(s.rate.pacing_rate, Some(1.25 * 250_000.0));
        s.on_event(&CcEvent::ack(0.07, 1500, 0.03, 250_000.0));
        assert_eq!(vars(&s).cycle_index, 1);
        assert_eq!(s.rate.pacing_rate, Some(0.75 * 250_000.0));
    }

    #[test]
    fn loss_leaves_rate_alone() {
        let mut s = CcState::init(AlgorithmId::BbrLite, 0.0, 1500);
        s.phase = Phase::CongestionAvoidance;
        s.on_event(&CcEvent::ack(0.03, 1500, 0.03, 250_000.0));
        let before = s.rate;
        s.on_event(&CcEvent::loss(0.031));
        assert_eq!(s.rate.cwnd, before.cwnd);
        assert_eq!(s.rate.pacing_rate, before.pacing_rate);
        assert_eq!(s.phase, Phase::LossRecovery);
    }

    #[test]
    fn startup_exits_when_bandwidth_plateaus() {
        let mut s = CcState::init(AlgorithmId::BbrLite, 0.0, 1500);
        let mut t = 0.0;
        let mut rounds = 0;
        while s.phase == Phase::SlowStart && rounds < 10 {
            t += 0.03;
            rounds += 1;
            s.on_event(&CcEvent::ack(t, 1500, 0.03, 250_000.0));
            s.on_event(&CcEvent::round_end(t));
        }
        // One round sets full_bw, three more without growth end startup.
        assert_eq!(rounds, 4);
        assert_eq!(s.phase, Phase::CongestionAvoidance);
        assert_eq!(vars(&s).cycle_index, 1);
    }
}
