use std::collections::BTreeMap;

use crate::agent::Agent;
use crate::cc::AlgorithmId;
use crate::netsim::{
    AckInfo, Allowance, CongestionHost, FlowId, FlowSpec, RateSnapshot, RtoInfo,
};
use crate::selector::{Selector, SelectorError};
use crate::switcher::{ConnectionControlBlock, SwitchCommand, SwitchRecord};

/// One core's kernel side: an agent plus the control blocks of the flows it
/// owns. In deterministic mode the core's selector rides along and is
/// ticked from the simulator's drain timer.
#[derive(Debug)]
pub struct CoreHost {
    agent: Agent,
    selector: Option<Selector>,
    ccbs: Vec<Option<ConnectionControlBlock>>,
    index_of: BTreeMap<FlowId, usize>,
    scripted: Vec<SwitchCommand>,
    /// Agent invocations (acks + timeouts) per flow.
    pub invocations: Vec<u64>,
    error: Option<SelectorError>,
}

impl CoreHost {
    pub fn new(agent: Agent, selector: Option<Selector>, flows: &[FlowSpec]) -> CoreHost {
        CoreHost {
            agent,
            selector,
            ccbs: vec![None; flows.len()],
            index_of: flows
                .iter()
                .enumerate()
                .map(|(i, f)| (f.flow_id, i))
                .collect(),
            scripted: Vec::new(),
            invocations: vec![0; flows.len()],
            error: None,
        }
    }

    /// Registers a scripted command; returns the timer token to fire it.
    pub fn script(&mut self, cmd: SwitchCommand) -> u64 {
        self.scripted.push(cmd);
        (self.scripted.len() - 1) as u64
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn selector_mut(&mut self) -> Option<&mut Selector> {
        self.selector.as_mut()
    }

    pub fn take_selector(&mut self) -> Option<Selector> {
        self.selector.take()
    }

    pub fn ccb(&self, idx: usize) -> Option<&ConnectionControlBlock> {
        self.ccbs.get(idx).and_then(|c| c.as_ref())
    }

    /// First hard selector failure seen during the run.
    pub fn error(&self) -> Option<&SelectorError> {
        self.error.as_ref()
    }

    fn fail(&mut self, e: SelectorError) {
        log::error!("{e}");
        self.error.get_or_insert(e);
    }

    fn sync_down(&mut self) {
        let CoreHost {
            agent,
            ccbs,
            index_of,
            ..
        } = self;
        agent.sync_down(|cmd| {
            match index_of.get(&cmd.flow_id).and_then(|&i| ccbs[i].as_mut()) {
                Some(ccb) => ccb.request_switch(cmd),
                None => log::warn!("switch command for unknown flow {}", cmd.flow_id),
            }
        });
    }

    fn ccb_mut(&mut self, idx: usize) -> &mut ConnectionControlBlock {
        self.ccbs[idx].as_mut().expect("flow not open")
    }
}

impl CongestionHost for CoreHost {
    fn open_flow(&mut self, idx: usize, spec: &FlowSpec, now: f64) {
        self.ccbs[idx] = Some(ConnectionControlBlock::new(
            spec.flow_id,
            spec.initial_algorithm,
            now,
            spec.mss,
        ));
    }

    fn allowance(&mut self, idx: usize, in_flight: u64, next_bytes: u64, now: f64) -> Allowance {
        let cc = &self.ccb_mut(idx).cc;
        Allowance {
            bytes: cc.sending_allowance(in_flight, now),
            retry_at: cc.next_send_time(in_flight, next_bytes, now),
        }
    }

    fn on_transmit(&mut self, idx: usize, bytes: u64, now: f64) {
        self.ccb_mut(idx).cc.on_sent(bytes, now);
    }

    fn on_ack(&mut self, idx: usize, ack: &AckInfo) -> Option<SwitchRecord> {
        self.sync_down();
        self.invocations[idx] += 1;
        let ccb = self.ccbs[idx].as_mut().expect("flow not open");
        self.agent.on_ack(ccb, ack)
    }

    fn on_rto(&mut self, idx: usize, rto: &RtoInfo) -> Option<SwitchRecord> {
        self.sync_down();
        self.invocations[idx] += 1;
        let ccb = self.ccbs[idx].as_mut().expect("flow not open");
        self.agent.on_rto(ccb, rto)
    }

    fn snapshot(&self, idx: usize) -> RateSnapshot {
        let r = &self.ccb(idx).expect("flow not open").cc.rate;
        RateSnapshot {
            cwnd: r.cwnd,
            pacing_rate: r.pacing_rate,
            srtt: r.srtt,
        }
    }

    fn history(&self, idx: usize) -> Vec<AlgorithmId> {
        self.ccb(idx).map(|c| c.history.clone()).unwrap_or_default()
    }

    fn on_tick(&mut self, now: f64) {
        if let Some(sel) = self.selector.as_mut() {
            if let Err(e) = sel.tick(now) {
                self.fail(e);
            }
        }
    }

    fn on_timer(&mut self, token: u64, now: f64) {
        let Some(mut cmd) = self.scripted.get(token as usize).copied() else {
            return;
        };
        cmd.issued_at = now;
        log::debug!(
            "scripted switch of flow {} to {} at {now:.3}s",
            cmd.flow_id,
            cmd.new_algorithm
        );
        match self.selector.as_mut() {
            Some(sel) => {
                if let Err(e) = sel.issue(cmd) {
                    self.fail(e);
                }
            }
            // Selector lives on another thread: raise the flag directly.
            None => {
                if let Some(&i) = self.index_of.get(&cmd.flow_id) {
                    if let Some(ccb) = self.ccbs[i].as_mut() {
                        ccb.request_switch(cmd);
                    }
                }
            }
        }
    }
}
