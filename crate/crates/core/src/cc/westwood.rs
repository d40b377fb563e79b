//! Westwood: Reno growth, with the post-loss threshold set from an
//! end-to-end bandwidth estimate instead of halving.

use super::{CcEvent, CcEventKind, Ctl, Phase};

/// Weight of the previous estimate in the per-round EWMA.
const BW_GAIN: f64 = 0.9;
const MIN_SSTHRESH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WestwoodVars {
    /// Bytes/second; refreshed once per round.
    pub bandwidth_estimation: f64,
    /// Bytes acked since init; refreshed on every ack.
    pub cumulated_acked: u64,
    pub rtt_min: f64,
    /// `cumulated_acked` at the last round boundary.
    pub round_acked_mark: u64,
    pub round_started_at: f64,
}

impl WestwoodVars {
    pub fn new(now: f64) -> Self {
        WestwoodVars {
            bandwidth_estimation: 0.0,
            cumulated_acked: 0,
            rtt_min: f64::INFINITY,
            round_acked_mark: 0,
            round_started_at: now,
        }
    }

    /// Window, in packets, matching the estimated bandwidth at `rtt_min`.
    pub fn bdp_pkts(&self, mss: f64) -> f64 {
        if self.bandwidth_estimation > 0.0 && self.rtt_min.is_finite() {
            (self.bandwidth_estimation * self.rtt_min / mss).floor()
        } else {
            0.0
        }
    }

    fn end_round(&mut self, now: f64) {
        let elapsed = now - self.round_started_at;
        if elapsed <= 0.0 {
            return;
        }
        let sample = (self.cumulated_acked - self.round_acked_mark) as f64 / elapsed;
        self.bandwidth_estimation = if self.bandwidth_estimation == 0.0 {
            sample
        } else {
            BW_GAIN * self.bandwidth_estimation + (1.0 - BW_GAIN) * sample
        };
        self.round_acked_mark = self.cumulated_acked;
        self.round_started_at = now;
    }
}

pub(super) fn on_event(v: &mut WestwoodVars, mut ctl: Ctl<'_>, ev: &CcEvent) {
    match ev.kind {
        CcEventKind::Ack => {
            v.cumulated_acked += ev.acked_bytes;
            v.rtt_min = v.rtt_min.min(ev.rtt_sample);
            let acked = ctl.acked_pkts(ev);
            ctl.reno_increase(acked);
        }
        CcEventKind::RoundEnd => {
            v.end_round(ev.now);
            ctl.leave_recovery();
        }
        CcEventKind::LossDetected => {
            let ssthresh = v.bdp_pkts(ctl.mss).max(MIN_SSTHRESH);
            ctl.rate.ssthresh = ssthresh;
            ctl.rate.cwnd = ssthresh.min(ctl.rate.cwnd - 1.0);
            ctl.enter(Phase::LossRecovery);
        }
        CcEventKind::RtoFired => {
            ctl.rate.ssthresh = v.bdp_pkts(ctl.mss).max(MIN_SSTHRESH);
            ctl.rate.cwnd = 1.0;
            ctl.enter(Phase::LossRecovery);
        }
    }
}
