//! The per-core collector and switch executor.
//!
//! On every ack or retransmission timeout the agent first applies any
//! pending switch flag, then records one [`AckSample`] into the upward pipe,
//! then runs the congestion controller. Collection only reads transport
//! state, so turning it off never changes what the controller does.

use crate::cc::CcEvent;
use crate::netsim::{AckInfo, FlowId, RtoInfo};
use crate::pipes::{AgentEnd, PipeStats, PushOutcome};
use crate::switcher::{ConnectionControlBlock, SwitchCommand, SwitchRecord};

/// One telemetry record, as carried by the upward pipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AckSample {
    pub flow_id: FlowId,
    pub timestamp: f64,
    /// `None` for timeout-triggered samples.
    pub rtt: Option<f64>,
    pub acked_bytes: u64,
    /// Bytes acked over the last round trip divided by that round trip.
    pub delivery_rate: f64,
    pub loss_event: bool,
    pub cumulative_retransmits: u64,
    /// Never set: the simulator does not mark ECN.
    pub ece: bool,
}

/// What the agent did during one invocation, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentStep {
    ApplyPending,
    PushSample,
    CcAck,
    CcLoss,
    CcRto,
    CcRoundEnd,
}

#[derive(Debug)]
pub struct Agent {
    pipes: AgentEnd,
    collect: bool,
    steps: Option<Vec<AgentStep>>,
}

impl Agent {
    /// `collect = false` disables the upward pipe entirely.
    pub fn new(pipes: AgentEnd, collect: bool) -> Agent {
        Agent {
            pipes,
            collect,
            steps: None,
        }
    }

    /// Starts recording the step sequence of every invocation.
    pub fn record_steps(&mut self) {
        self.steps = Some(Vec::new());
    }

    pub fn steps(&self) -> &[AgentStep] {
        self.steps.as_deref().unwrap_or(&[])
    }

    fn step(&mut self, s: AgentStep) {
        if let Some(steps) = &mut self.steps {
            steps.push(s);
        }
    }

    fn push(&mut self, ccb: &mut ConnectionControlBlock, sample: AckSample) {
        if !self.collect {
            return;
        }
        ccb.sample_count += 1;
        self.step(AgentStep::PushSample);
        if self.pipes.up.push(sample) == PushOutcome::DroppedOverflow {
            log::trace!("upward pipe full; sample for flow {} dropped", ccb.flow_id);
        }
    }

    pub fn on_ack(
        &mut self,
        ccb: &mut ConnectionControlBlock,
        ack: &AckInfo,
    ) -> Option<SwitchRecord> {
        self.step(AgentStep::ApplyPending);
        let switched = ccb.apply_pending(ack.now);
        let sample = AckSample {
            flow_id: ccb.flow_id,
            timestamp: ack.now,
            rtt: Some(ack.rtt),
            acked_bytes: ack.acked_bytes,
            delivery_rate: ack.delivery_rate,
            loss_event: ack.loss_detected,
            cumulative_retransmits: ack.cumulative_retransmits,
            ece: false,
        };
        self.push(ccb, sample);
        self.step(AgentStep::CcAck);
        ccb.cc.on_event(&CcEvent::ack(
            ack.now,
            ack.acked_bytes,
            ack.rtt,
            ack.delivery_rate,
        ));
        if ack.loss_detected {
            self.step(AgentStep::CcLoss);
            ccb.cc.on_event(&CcEvent::loss(ack.now));
        }
        if ack.round_end {
            self.step(AgentStep::CcRoundEnd);
            ccb.cc.on_event(&CcEvent::round_end(ack.now));
        }
        switched
    }

    pub fn on_rto(
        &mut self,
        ccb: &mut ConnectionControlBlock,
        rto: &RtoInfo,
    ) -> Option<SwitchRecord> {
        self.step(AgentStep::ApplyPending);
        let switched = ccb.apply_pending(rto.now);
        let sample = AckSample {
            flow_id: ccb.flow_id,
            timestamp: rto.now,
            rtt: None,
            acked_bytes: 0,
            delivery_rate: 0.0,
            loss_event: true,
            cumulative_retransmits: rto.cumulative_retransmits,
            ece: false,
        };
        self.push(ccb, sample);
        self.step(AgentStep::CcRto);
        ccb.cc.on_event(&CcEvent::rto(rto.now));
        switched
    }

    /// Reads every queued switch command and hands it to `raise`, which is
    /// expected to set the flag on the owning control block.
    pub fn sync_down(&mut self, mut raise: impl FnMut(SwitchCommand)) -> usize {
        self.pipes.down.drain_with(usize::MAX, &mut raise)
    }

    pub fn upward_stats(&self) -> PipeStats {
        self.pipes.up.stats()
    }

    pub fn downward_stats(&self) -> PipeStats {
        self.pipes.down.stats()
    }
}
