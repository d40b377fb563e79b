use std::io::{self, Write};

use crate::cc::AlgorithmId;
use crate::pipes::PipeStats;
use crate::switcher::SwitchRecord;

use super::{FlowId, TransferSize};

/// Width of one goodput bin, seconds.
pub const GOODPUT_BIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// One row per ack, loss, timeout and switch.
    #[default]
    Full,
    /// Loss, timeout and switch rows only.
    Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Ack,
    Loss,
    Rto,
    Switch,
}

impl TraceEvent {
    pub fn name(self) -> &'static str {
        match self {
            TraceEvent::Ack => "ack",
            TraceEvent::Loss => "loss",
            TraceEvent::Rto => "rto",
            TraceEvent::Switch => "switch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub flow_id: FlowId,
    pub cwnd_pkts: f64,
    pub pacing_rate: Option<f64>,
    pub srtt: Option<f64>,
    pub acked_bytes: u64,
    pub event: TraceEvent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    pub flow_id: FlowId,
    pub group: String,
    pub start_time: f64,
    pub transfer_size: TransferSize,
    /// Start to last byte acked; `None` if the flow did not finish.
    pub fct: Option<f64>,
    pub bytes_acked: u64,
    pub sent_pkts: u64,
    /// Arrivals at the receiver, duplicates included.
    pub delivered_pkts: u64,
    pub dropped_queue: u64,
    pub dropped_random: u64,
    /// Still on the wire when the run stopped.
    pub in_network: u64,
    pub retransmits: u64,
    pub rto_count: u64,
    /// Newly acked bytes per [`GOODPUT_BIN`], from time zero.
    pub goodput_bins: Vec<u64>,
    pub algorithm_history: Vec<AlgorithmId>,
}

impl FlowReport {
    pub fn dropped_pkts(&self) -> u64 {
        self.dropped_queue + self.dropped_random
    }

    /// Mean goodput over the flow's lifetime (or until `end` if unfinished).
    pub fn mean_goodput_bps(&self, end: f64) -> f64 {
        let span = self.fct.unwrap_or(end - self.start_time);
        if span <= 0.0 {
            return 0.0;
        }
        self.bytes_acked as f64 * 8.0 / span
    }

    /// Goodput in bits/second over `[t0, t1)`, snapped to bin edges.
    pub fn goodput_between(&self, t0: f64, t1: f64) -> f64 {
        let b0 = (t0 / GOODPUT_BIN).round() as usize;
        let b1 = (t1 / GOODPUT_BIN).round() as usize;
        if b1 <= b0 {
            return 0.0;
        }
        let bytes: u64 = (b0..b1)
            .map(|b| self.goodput_bins.get(b).copied().unwrap_or(0))
            .sum();
        bytes as f64 * 8.0 / ((b1 - b0) as f64 * GOODPUT_BIN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipeCounters {
    pub core_id: usize,
    pub direction: &'static str,
    pub stats: PipeStats,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimReport {
    pub duration: f64,
    pub flows: Vec<FlowReport>,
    pub trace: Vec<TraceRow>,
    pub switches: Vec<SwitchRecord>,
    pub pipes: Vec<PipeCounters>,
    pub events_dispatched: u64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SimReport {
    pub fn flow(&self, id: FlowId) -> Option<&FlowReport> {
        self.flows.iter().find(|f| f.flow_id == id)
    }

    /// Folds per-core reports into one, ordered by flow id and time.
    pub fn merge(parts: Vec<SimReport>) -> SimReport {
        let mut out = SimReport::default();
        for p in parts {
            out.duration = out.duration.max(p.duration);
            out.flows.extend(p.flows);
            out.trace.extend(p.trace);
            out.switches.extend(p.switches);
            out.pipes.extend(p.pipes);
            out.events_dispatched += p.events_dispatched;
        }
        out.flows.sort_by_key(|f| f.flow_id);
        // Stable sorts keep each flow's own event order.
        out.trace
            .sort_by(|a, b| a.time.total_cmp(&b.time).then(a.flow_id.cmp(&b.flow_id)));
        out.switches
            .sort_by(|a, b| a.time.total_cmp(&b.time).then(a.flow_id.cmp(&b.flow_id)));
        out.pipes
            .sort_by(|a, b| (a.core_id, a.direction).cmp(&(b.core_id, b.direction)));
        out
    }

    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "time_s,flow_id,cwnd_pkts,pacing_rate_Bps,srtt_s,acked_bytes,event"
        )?;
        for r in &self.trace {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.time,
                r.flow_id,
                r.cwnd_pkts,
                opt(r.pacing_rate),
                opt(r.srtt),
                r.acked_bytes,
                r.event.name()
            )?;
        }
        Ok(())
    }

    pub fn write_flows_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "flow_id,fct_s,mean_goodput_bps,algorithm_history,group,sent_pkts,delivered_pkts,dropped_pkts,retransmits"
        )?;
        for f in &self.flows {
            let history: Vec<&str> = f.algorithm_history.iter().map(|a| a.name()).collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                f.flow_id,
                opt(f.fct),
                f.mean_goodput_bps(self.duration),
                history.join(";"),
                f.group,
                f.sent_pkts,
                f.delivered_pkts,
                f.dropped_pkts(),
                f.retransmits
            )?;
        }
        Ok(())
    }

    pub fn write_switches_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time_s,flow_id,from_alg,to_alg,cwnd_at_switch")?;
        for s in &self.switches {
            writeln!(
                w,
                "{},{},{},{},{}",
                s.time, s.flow_id, s.from, s.to, s.cwnd_at_switch
            )?;
        }
        Ok(())
    }

    pub fn write_pipes_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "core_id,direction,capacity,pushed,drained,overflow")?;
        for p in &self.pipes {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                p.core_id,
                p.direction,
                p.stats.capacity,
                p.stats.pushed,
                p.stats.drained,
                p.stats.overflow
            )?;
        }
        Ok(())
    }

    /// Per-flow goodput timeseries, one row per bin.
    pub fn write_throughput_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time_s,flow_id,goodput_bps")?;
        for f in &self.flows {
            for (i, bytes) in f.goodput_bins.iter().enumerate() {
                let t = i as f64 * GOODPUT_BIN;
                writeln!(
                    w,
                    "{:.1},{},{}",
                    t,
                    f.flow_id,
                    *bytes as f64 * 8.0 / GOODPUT_BIN
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow(bins: Vec<u64>) -> FlowReport {
        FlowReport {
            flow_id: FlowId(0),
            group: "g".into(),
            start_time: 0.0,
            transfer_size: TransferSize::Unbounded,
            fct: None,
            bytes_acked: bins.iter().sum(),
            sent_pkts: 0,
            delivered_pkts: 0,
            dropped_queue: 0,
            dropped_random: 0,
            in_network: 0,
            retransmits: 0,
            rto_count: 0,
            goodput_bins: bins,
            algorithm_history: vec![AlgorithmId::Cubic],
        }
    }

    #[test]
    fn goodput_window() {
        let f = flow(vec![1000, 2000, 3000, 0]);
        assert!((f.goodput_between(0.0, 0.2) - 3000.0 * 8.0 / 0.2).abs() < 1e-9);
        assert!((f.goodput_between(0.2, 0.6) - 3000.0 * 8.0 / 0.4).abs() < 1e-9);
        assert_eq!(f.goodput_between(0.3, 0.3), 0.0);
        assert!((f.mean_goodput_bps(0.4) - 6000.0 * 8.0 / 0.4).abs() < 1e-9);
    }

    #[test]
    fn flows_csv_joins_history() {
        let mut r = SimReport {
            duration: 1.0,
            ..Default::default()
        };
        let mut f = flow(vec![]);
        f.algorithm_history = vec![AlgorithmId::Cubic, AlgorithmId::BbrLite];
        r.flows.push(f);
        let mut buf = Vec::new();
        r.write_flows_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",cubic;bbr_lite,g,"));
    }
}
