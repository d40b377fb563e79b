//! The user-side decision maker.
//!
//! A selector owns one pipe pair. Each tick it drains the upward ring, folds
//! samples into per-flow RTT statistics, runs its rules, and writes any
//! resulting switch commands to the downward ring.

mod stats;

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::agent::AckSample;
use crate::cc::AlgorithmId;
use crate::netsim::FlowId;
use crate::pipes::{PipeStats, PushOutcome, SelectorEnd};
use crate::switcher::SwitchCommand;

pub use stats::RunningStats;

/// Drain period in simulated seconds.
pub const DEFAULT_TICK: f64 = 0.002;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectorError {
    #[error("selector for core {0} is closed")]
    Closed(usize),
    #[error("downward pipe full; command for flow {0} lost")]
    DownwardOverflow(FlowId),
    #[error("invalid rule config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleConfig {
    pub n_samples: u32,
    pub cov_threshold: f64,
    pub range_threshold: f64,
    pub wifi_algorithm: AlgorithmId,
    pub default_algorithm: AlgorithmId,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            n_samples: 80,
            cov_threshold: 0.25,
            range_threshold: 1.0,
            wifi_algorithm: AlgorithmId::Westwood,
            default_algorithm: AlgorithmId::Cubic,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<(), SelectorError> {
        if self.n_samples < 2 {
            return Err(SelectorError::InvalidConfig("n_samples must be >= 2"));
        }
        if !(self.cov_threshold > 0.0) || !(self.range_threshold > 0.0) {
            return Err(SelectorError::InvalidConfig("thresholds must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// High RTT jitter in the first samples means a wireless last hop.
    Wifi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorFlowState {
    pub flow_id: FlowId,
    pub rtt: RunningStats,
    pub chosen: Option<AlgorithmId>,
    pub loss_events: u64,
    pub samples_seen: u64,
    /// Latest cumulative retransmission count reported by the agent.
    pub retransmits: u64,
    /// Samples that carried an RTT, counted past `n_samples` too.
    pub acked_samples: u64,
}

impl SelectorFlowState {
    pub fn new(flow_id: FlowId) -> Self {
        SelectorFlowState {
            flow_id,
            rtt: RunningStats::default(),
            chosen: None,
            loss_events: 0,
            samples_seen: 0,
            retransmits: 0,
            acked_samples: 0,
        }
    }

    pub fn rtt_cnt(&self) -> u64 {
        self.rtt.count
    }

    /// Retransmissions per acked packet.
    pub fn loss_rate(&self) -> Option<f64> {
        (self.acked_samples > 0).then(|| self.retransmits as f64 / self.acked_samples as f64)
    }

    /// Folds one sample. RTT statistics stop at `n_samples`; counters don't.
    pub fn update_stats(&mut self, s: &AckSample, n_samples: u32) {
        debug_assert_eq!(s.flow_id, self.flow_id);
        self.samples_seen += 1;
        self.retransmits = self.retransmits.max(s.cumulative_retransmits);
        if s.loss_event {
            self.loss_events += 1;
        }
        if let Some(rtt) = s.rtt.filter(|r| *r > 0.0) {
            self.acked_samples += 1;
            if self.rtt.count < n_samples as u64 {
                self.rtt.push(rtt);
            }
        }
    }
}

/// One classification decision, as logged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub flow_id: FlowId,
    pub decision_time: f64,
    pub cov: Option<f64>,
    pub norm_range: Option<f64>,
    pub chosen: AlgorithmId,
    /// Whether a command was issued (as opposed to keeping the default).
    pub switched: bool,
}

/// Evaluates the WiFi rule and records the decision on `st`. Returns the
/// algorithm to switch to when the rule fires.
pub fn eval_wifi_rule(st: &mut SelectorFlowState, cfg: &RuleConfig) -> Option<AlgorithmId> {
    if st.chosen.is_some() {
        return None;
    }
    let n = st.rtt_cnt();
    if n >= 2 && n <= cfg.n_samples as u64 {
        if let (Some(cov), Some(range)) = (st.rtt.cov(), st.rtt.norm_range()) {
            if cov > cfg.cov_threshold && range > cfg.range_threshold {
                st.chosen = Some(cfg.wifi_algorithm);
                return Some(cfg.wifi_algorithm);
            }
        }
    }
    if n >= cfg.n_samples as u64 {
        st.chosen = Some(cfg.default_algorithm);
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorSummary {
    pub core_id: usize,
    pub flows: Vec<SelectorFlowState>,
    pub classifications: Vec<Classification>,
    pub up: PipeStats,
    pub down: PipeStats,
    /// Longest wait of a sample in the upward ring, in simulated seconds.
    pub max_staleness: f64,
    pub commands_issued: u64,
}

#[derive(Debug)]
pub struct Selector {
    core_id: usize,
    pipes: SelectorEnd,
    cfg: RuleConfig,
    rules: Vec<Rule>,
    flows: BTreeMap<FlowId, SelectorFlowState>,
    log: Vec<Classification>,
    max_staleness: f64,
    latest_sample: f64,
    commands_issued: u64,
    closed: bool,
}

impl Selector {
    pub fn open(
        core_id: usize,
        pipes: SelectorEnd,
        cfg: RuleConfig,
        rules: Vec<Rule>,
    ) -> Result<Selector, SelectorError> {
        cfg.validate()?;
        Ok(Selector {
            core_id,
            pipes,
            cfg,
            rules,
            flows: BTreeMap::new(),
            log: Vec::new(),
            max_staleness: 0.0,
            latest_sample: 0.0,
            commands_issued: 0,
            closed: false,
        })
    }

    pub fn core_id(&self) -> usize {
        self.core_id
    }

    pub fn config(&self) -> &RuleConfig {
        &self.cfg
    }

    pub fn flow(&self, id: FlowId) -> Option<&SelectorFlowState> {
        self.flows.get(&id)
    }

    pub fn flows(&self) -> impl Iterator<Item = &SelectorFlowState> {
        self.flows.values()
    }

    pub fn classifications(&self) -> &[Classification] {
        &self.log
    }

    /// Timestamp of the newest sample folded so far.
    pub fn latest_sample_time(&self) -> f64 {
        self.latest_sample
    }

    fn ensure_open(&self) -> Result<(), SelectorError> {
        if self.closed {
            Err(SelectorError::Closed(self.core_id))
        } else {
            Ok(())
        }
    }

    /// Queues a command directly, bypassing the rules.
    pub fn issue(&mut self, cmd: SwitchCommand) -> Result<(), SelectorError> {
        self.ensure_open()?;
        match self.pipes.down.push(cmd) {
            PushOutcome::Ok => {
                self.commands_issued += 1;
                Ok(())
            }
            PushOutcome::DroppedOverflow => Err(SelectorError::DownwardOverflow(cmd.flow_id)),
        }
    }

    /// Drains the upward ring, updates statistics and runs the rules.
    pub fn tick(&mut self, now: f64) -> Result<Vec<SwitchCommand>, SelectorError> {
        self.ensure_open()?;
        let mut out = Vec::new();
        let Selector {
            pipes,
            cfg,
            rules,
            flows,
            log,
            max_staleness,
            latest_sample,
            ..
        } = self;
        let mut overflow = None;
        pipes.up.drain_with(usize::MAX, |s| {
            *max_staleness = max_staleness.max(now - s.timestamp);
            *latest_sample = latest_sample.max(s.timestamp);
            let st = flows
                .entry(s.flow_id)
                .or_insert_with(|| SelectorFlowState::new(s.flow_id));
            st.update_stats(&s, cfg.n_samples);
            for rule in rules.iter() {
                let Rule::Wifi = rule;
                let was_open = st.chosen.is_none();
                let fired = eval_wifi_rule(st, cfg);
                if let (true, Some(chosen)) = (was_open, st.chosen) {
                    log.push(Classification {
                        flow_id: st.flow_id,
                        decision_time: s.timestamp,
                        cov: st.rtt.cov(),
                        norm_range: st.rtt.norm_range(),
                        chosen,
                        switched: fired.is_some(),
                    });
                }
                if let Some(alg) = fired {
                    let cmd = SwitchCommand {
                        flow_id: st.flow_id,
                        new_algorithm: alg,
                        issued_at: now,
                    };
                    if pipes.down.push(cmd) == PushOutcome::DroppedOverflow {
                        overflow.get_or_insert(st.flow_id);
                    }
                    out.push(cmd);
                    break;
                }
            }
        });
        self.commands_issued += out.len() as u64;
        if let Some(flow) = overflow {
            return Err(SelectorError::DownwardOverflow(flow));
        }
        Ok(out)
    }

    /// Ends the session and returns its counters. A second close fails.
    pub fn close(&mut self) -> Result<SelectorSummary, SelectorError> {
        self.ensure_open()?;
        self.closed = true;
        Ok(SelectorSummary {
            core_id: self.core_id,
            flows: self.flows.values().cloned().collect(),
            classifications: self.log.clone(),
            up: self.pipes.up.stats(),
            down: self.pipes.down.stats(),
            max_staleness: self.max_staleness,
            commands_issued: self.commands_issued,
        })
    }
}

pub fn write_classification_csv<W: Write>(rows: &[Classification], mut w: W) -> io::Result<()> {
    writeln!(w, "flow_id,decision_time_s,cov,norm_range,chosen_algorithm")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            c.flow_id,
            c.decision_time,
            opt(c.cov),
            opt(c.norm_range),
            c.chosen
        )?;
    }
    Ok(())
}
