//! Live algorithm replacement.
//!
//! The new algorithm inherits the sending rate and starts from its own
//! default observed variables. Window algorithms inherit cwnd (and ssthresh
//! when both sides are window-based); a pacing algorithm additionally gets
//! `cwnd · mss / last_rtt_sample` as its starting pacing rate.

use crate::cc::{AlgorithmId, CcState, Phase};
use crate::netsim::FlowId;

/// Request to move one flow to another algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchCommand {
    pub flow_id: FlowId,
    pub new_algorithm: AlgorithmId,
    pub issued_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SwitchError {
    #[error("no RTT sample yet; switch deferred")]
    NoRttSample,
}

/// A switch that took effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchRecord {
    pub time: f64,
    pub flow_id: FlowId,
    pub from: AlgorithmId,
    pub to: AlgorithmId,
    pub cwnd_at_switch: f64,
    /// cwnd of the migrated state, before the triggering event is processed.
    pub cwnd_after: f64,
}

/// Rebuilds `old` as `new_id`. Same-algorithm requests return `old` as is.
pub fn migrate(old: &CcState, new_id: AlgorithmId, now: f64) -> Result<CcState, SwitchError> {
    if old.id() == new_id {
        return Ok(*old);
    }
    let last_rtt = old.rate.last_rtt_sample.ok_or(SwitchError::NoRttSample)?;
    let mut new = CcState::init(new_id, now, old.mss);
    new.rate.cwnd = old.rate.cwnd;
    new.rate.srtt = old.rate.srtt;
    new.rate.last_rtt_sample = old.rate.last_rtt_sample;
    match (old.id().is_pacing(), new_id.is_pacing()) {
        (false, false) => new.rate.ssthresh = old.rate.ssthresh,
        (false, true) => {
            new.rate.pacing_rate = Some(old.rate.cwnd * old.mss as f64 / last_rtt);
        }
        (true, false) => {}
        (true, true) => new.rate.pacing_rate = old.rate.pacing_rate,
    }
    new.phase = match old.phase {
        Phase::LossRecovery => Phase::LossRecovery,
        _ => Phase::CongestionAvoidance,
    };
    Ok(new)
}

/// Per-flow transport state as the agent sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionControlBlock {
    pub flow_id: FlowId,
    pub cc: CcState,
    pub pending_switch: Option<SwitchCommand>,
    /// Sample pushes attempted for this flow.
    pub sample_count: u64,
    pub mss: u32,
    /// Algorithms this flow has run, in order.
    pub history: Vec<AlgorithmId>,
}

impl ConnectionControlBlock {
    pub fn new(flow_id: FlowId, algorithm: AlgorithmId, now: f64, mss: u32) -> Self {
        ConnectionControlBlock {
            flow_id,
            cc: CcState::init(algorithm, now, mss),
            pending_switch: None,
            sample_count: 0,
            mss,
            history: vec![algorithm],
        }
    }

    /// Raises the switch flag. A later command replaces an earlier pending one.
    pub fn request_switch(&mut self, cmd: SwitchCommand) {
        debug_assert_eq!(cmd.flow_id, self.flow_id);
        self.pending_switch = Some(cmd);
    }

    /// Carries out a pending switch if the flow has an RTT sample; otherwise
    /// the command stays pending. Called at the top of every CC invocation.
    pub fn apply_pending(&mut self, now: f64) -> Option<SwitchRecord> {
        let cmd = self.pending_switch?;
        let from = self.cc.id();
        match migrate(&self.cc, cmd.new_algorithm, now) {
            Ok(next) => {
                self.pending_switch = None;
                if from == cmd.new_algorithm {
                    return None;
                }
                let cwnd_at_switch = self.cc.rate.cwnd;
                self.cc = next;
                self.history.push(cmd.new_algorithm);
                log::debug!(
                    "flow {} switched {} -> {} at {:.4}s (cwnd {:.3})",
                    self.flow_id,
                    from,
                    cmd.new_algorithm,
                    now,
                    cwnd_at_switch
                );
                Some(SwitchRecord {
                    time: now,
                    flow_id: self.flow_id,
                    from,
                    to: cmd.new_algorithm,
                    cwnd_at_switch,
                    cwnd_after: self.cc.rate.cwnd,
                })
            }
            Err(SwitchError::NoRttSample) => None,
        }
    }
}
