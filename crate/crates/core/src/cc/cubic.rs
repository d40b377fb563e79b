//! CUBIC: W(t) = C·(t − K)³ + W_origin, multiplicative decrease by β.

use super::{CcEvent, CcEventKind, Ctl, Phase};

const C: f64 = 0.4;
const BETA: f64 = 0.7;
/// Growth cap per acked packet while far below the cubic target.
const MAX_INCREMENT_PER_PKT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicVars {
    /// Smallest RTT seen; updated on every ack.
    pub delay_min: f64,
    /// Window just before the last reduction; updated on loss and RTO.
    pub last_max_cwnd: f64,
    /// Start of the current growth epoch.
    pub epoch_start: Option<f64>,
    /// Seconds from epoch start until the curve reaches `origin_cwnd`.
    pub k: f64,
    pub origin_cwnd: f64,
}

impl Default for CubicVars {
    fn default() -> Self {
        CubicVars {
            delay_min: f64::INFINITY,
            last_max_cwnd: 0.0,
            epoch_start: None,
            k: 0.0,
            origin_cwnd: 0.0,
        }
    }
}

impl CubicVars {
    fn start_epoch(&mut self, cwnd: f64, now: f64) {
        self.epoch_start = Some(now);
        if cwnd < self.last_max_cwnd {
            self.k = ((self.last_max_cwnd - cwnd) / C).cbrt();
            self.origin_cwnd = self.last_max_cwnd;
        } else {
            self.k = 0.0;
            self.origin_cwnd = cwnd;
        }
    }

    /// Target window `t` seconds into the epoch.
    pub fn target(&self, t: f64) -> f64 {
        let dt = t - self.k;
        C * dt * dt * dt + self.origin_cwnd
    }

    fn reduce(&mut self, ctl: &mut Ctl<'_>) {
        let cwnd = ctl.rate.cwnd;
        self.last_max_cwnd = cwnd;
        self.epoch_start = None;
        ctl.rate.ssthresh = (cwnd * BETA).max(2.0);
    }
}

pub(super) fn on_event(v: &mut CubicVars, mut ctl: Ctl<'_>, ev: &CcEvent) {
    match ev.kind {
        CcEventKind::Ack => {
            v.delay_min = v.delay_min.min(ev.rtt_sample);
            let acked = ctl.acked_pkts(ev);
            match *ctl.phase {
                Phase::SlowStart => ctl.reno_increase(acked),
                Phase::CongestionAvoidance => {
                    let cwnd = ctl.rate.cwnd;
                    let epoch = match v.epoch_start {
                        Some(t) => t,
                        None => {
                            v.start_epoch(cwnd, ev.now);
                            ev.now
                        }
                    };
                    let target = v.target(ev.now - epoch);
                    let per_pkt = if target > cwnd {
                        ((target - cwnd) / cwnd).min(MAX_INCREMENT_PER_PKT)
                    } else {
                        0.01 / cwnd
                    };
                    ctl.rate.cwnd += per_pkt * acked;
                }
                Phase::LossRecovery => {}
            }
        }
        CcEventKind::LossDetected => {
            v.reduce(&mut ctl);
            ctl.rate.cwnd *= BETA;
            ctl.enter(Phase::LossRecovery);
        }
        CcEventKind::RtoFired => {
            v.reduce(&mut ctl);
            ctl.rate.cwnd = 1.0;
            ctl.enter(Phase::LossRecovery);
        }
        CcEventKind::RoundEnd => ctl.leave_recovery(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::{AlgorithmId, CcState, Observed};

    fn cubic(state: &CcState) -> CubicVars {
        match state.observed {
            Observed::Cubic(v) => v,
            _ => unreachable!(),
        }
    }

    #[test]
    fn slow_start_adds_one_per_acked_packet() {
        let mut s = CcState::init(AlgorithmId::Cubic, 0.0, 1500);
        s.on_event(&CcEvent::ack(0.1, 1500, 0.1, 15_000.0));
        assert_eq!(s.rate.cwnd, 11.0);
        assert_eq!(s.phase, Phase::SlowStart);
        assert_eq!(cubic(&s).delay_min, 0.1);
    }

    #[test]
    fn loss_reduces_by_beta_and_records_max() {
        let mut s = CcState::init(AlgorithmId::Cubic, 0.0, 1500);
        s.rate.cwnd = 40.0;
        s.on_event(&CcEvent::loss(1.0));
        assert!((s.rate.cwnd - 28.0).abs() < 1e-12);
        assert!((s.rate.ssthresh - 28.0).abs() < 1e-12);
        assert_eq!(cubic(&s).last_max_cwnd, 40.0);
        assert_eq!(s.phase, Phase::LossRecovery);
        s.on_event(&CcEvent::round_end(1.1));
        assert_eq!(s.phase, Phase::CongestionAvoidance);
    }

    #[test]
    fn curve_starts_at_reduced_window_and_returns_to_max() {
        let mut v = CubicVars {
            last_max_cwnd: 100.0,
            ..CubicVars::default()
        };
        v.start_epoch(70.0, 5.0);
        assert!((v.target(0.0) - 70.0).abs() < 1e-9);
        assert!((v.target(v.k) - 100.0).abs() < 1e-12);
        // K = cbrt(W_max (1 - beta) / C)
        assert!((v.k - (100.0f64 * 0.3 / 0.4).cbrt()).abs() < 1e-12);
    }

    #[test]
    fn avoidance_grows_towards_previous_max() {
        let mut s = CcState::init(AlgorithmId::Cubic, 0.0, 1500);
        s.rate.cwnd = 50.0;
        s.on_event(&CcEvent::loss(1.0));
        s.on_event(&CcEvent::round_end(1.05));
        let after_loss = s.rate.cwnd;
        let mut t = 1.05;
        for _ in 0..2000 {
            t += 0.002;
            s.on_event(&CcEvent::ack(t, 1500, 0.05, 1e6));
        }
        assert!(s.rate.cwnd > after_loss);
        assert!(s.rate.cwnd > 45.0, "cwnd {}", s.rate.cwnd);
    }
}
