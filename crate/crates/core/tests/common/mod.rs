//! Helpers shared by the integration tests.
#![allow(dead_code)]

use mcc::cc::AlgorithmId;
use mcc::netsim::{
    AckInfo, Allowance, CongestionHost, DirectHost, FlowId, FlowSpec, JitterSpec, LinkSpec, RateSnapshot,
    RtoInfo, SimConfig, TraceMode, TransferSize,
};
use mcc::switcher::SwitchRecord;

/// DirectHost that also keeps every ack it is shown.
#[derive(Default)]
pub struct Recording {
    pub inner: DirectHost,
    pub acks: Vec<(usize, AckInfo)>,
}

impl CongestionHost for Recording {
    fn open_flow(&mut self, idx: usize, spec: &FlowSpec, now: f64) {
        self.inner.open_flow(idx, spec, now)
    }
    fn allowance(&mut self, idx: usize, in_flight: u64, next_bytes: u64, now: f64) -> Allowance {
        self.inner.allowance(idx, in_flight, next_bytes, now)
    }
    fn on_transmit(&mut self, idx: usize, bytes: u64, now: f64) {
        self.inner.on_transmit(idx, bytes, now)
    }
    fn on_ack(&mut self, idx: usize, ack: &AckInfo) -> Option<SwitchRecord> {
        self.acks.push((idx, *ack));
        self.inner.on_ack(idx, ack)
    }
    fn on_rto(&mut self, idx: usize, rto: &RtoInfo) -> Option<SwitchRecord> {
        self.inner.on_rto(idx, rto)
    }
    fn snapshot(&self, idx: usize) -> RateSnapshot {
        self.inner.snapshot(idx)
    }
}

pub fn link(bw: f64, rtt: f64, loss: f64, queue: usize) -> LinkSpec {
    LinkSpec {
        bandwidth: bw,
        prop_delay: rtt / 2.0,
        loss_ratio: loss,
        queue_capacity: queue,
        jitter: JitterSpec::none(),
    }
}

pub fn flow(id: u32, size: TransferSize, alg: AlgorithmId) -> FlowSpec {
    FlowSpec {
        flow_id: FlowId(id),
        start_time: 0.0,
        transfer_size: size,
        link: 0,
        initial_algorithm: alg,
        mss: 1500,
        group: "g".into(),
    }
}

pub fn cfg(seed: u64) -> SimConfig {
    SimConfig {
        seed,
        trace: TraceMode::Summary,
        tick_period: None,
    }
}
