//! Vegas: once per round, compare the queue the window is holding against
//! `alpha`/`beta` and nudge the window by one packet.

use super::{CcEvent, CcEventKind, Ctl, Phase};

const ALPHA: f64 = 2.0;
const BETA: f64 = 4.0;
/// Slow-start exit threshold, in queued packets.
const GAMMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VegasVars {
    /// Lowest RTT ever seen.
    pub base_rtt: f64,
    /// Lowest RTT in the current round.
    pub min_rtt: f64,
    /// RTT samples taken in the current round.
    pub count_rtt: u32,
}

impl Default for VegasVars {
    fn default() -> Self {
        VegasVars {
            base_rtt: f64::INFINITY,
            min_rtt: f64::INFINITY,
            count_rtt: 0,
        }
    }
}

impl VegasVars {
    /// Packets the window keeps queued at the bottleneck.
    pub fn queued_pkts(&self, cwnd: f64) -> Option<f64> {
        if self.count_rtt == 0 || !self.base_rtt.is_finite() || !self.min_rtt.is_finite() {
            return None;
        }
        Some(cwnd * (self.min_rtt - self.base_rtt) / self.min_rtt)
    }
}

pub(super) fn on_event(v: &mut VegasVars, mut ctl: Ctl<'_>, ev: &CcEvent) {
    match ev.kind {
        CcEventKind::Ack => {
            v.base_rtt = v.base_rtt.min(ev.rtt_sample);
            v.min_rtt = v.min_rtt.min(ev.rtt_sample);
            v.count_rtt += 1;
            if *ctl.phase == Phase::SlowStart {
                let acked = ctl.acked_pkts(ev);
                ctl.reno_increase(acked);
            }
        }
        CcEventKind::RoundEnd => {
            if let Some(diff) = v.queued_pkts(ctl.rate.cwnd) {
                match *ctl.phase {
                    Phase::SlowStart if diff > GAMMA => {
                        let target = ctl.rate.cwnd * v.base_rtt / v.min_rtt;
                        ctl.rate.cwnd = ctl.rate.cwnd.min(target + 1.0);
                        ctl.rate.ssthresh = ctl.rate.ssthresh.min(ctl.rate.cwnd);
                        ctl.enter(Phase::CongestionAvoidance);
                    }
                    Phase::CongestionAvoidance => {
                        if diff < ALPHA {
                            ctl.rate.cwnd += 1.0;
                        } else if diff > BETA {
                            ctl.rate.cwnd -= 1.0;
                        }
                    }
                    _ => {}
                }
            }
            ctl.leave_recovery();
            v.min_rtt = f64::INFINITY;
            v.count_rtt = 0;
        }
        CcEventKind::LossDetected => {
            ctl.rate.ssthresh = (ctl.rate.cwnd / 2.0).max(2.0);
            ctl.rate.cwnd /= 2.0;
            ctl.enter(Phase::LossRecovery);
        }
        CcEventKind::RtoFired => {
            ctl.rate.ssthresh = (ctl.rate.cwnd / 2.0).max(2.0);
            ctl.rate.cwnd = 1.0;
            ctl.enter(Phase::LossRecovery);
        }
    }
}
