use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crate::agent::Agent;
use crate::netsim::{FlowId, FlowSpec, LinkSpec, PipeCounters, SimConfig, SimError, SimReport, Simulator};
use crate::pipes::{PipeError, PipePair};
use crate::selector::{Classification, Selector, SelectorError, SelectorSummary};
use crate::switcher::SwitchCommand;

use super::checks::{self, Check};
use super::host::CoreHost;
use super::scenario::{Mode, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Pipe(#[from] PipeError),
    #[error("selector thread for core {0} panicked")]
    SelectorThread(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    /// Run cores on the rayon pool; ignored without the `parallel` feature.
    pub parallel: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            parallel: cfg!(feature = "parallel"),
        }
    }
}

/// Per-flow agent accounting, for audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowAudit {
    pub flow_id: FlowId,
    pub core_id: usize,
    pub sample_count: u64,
    pub invocations: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: String,
    pub report: SimReport,
    pub classifications: Vec<Classification>,
    pub selectors: Vec<SelectorSummary>,
    pub audits: Vec<FlowAudit>,
    pub checks: Vec<Check>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct CorePlan<'a> {
    core_id: usize,
    scenario: &'a Scenario,
    links: Vec<LinkSpec>,
    flows: Vec<FlowSpec>,
}

struct CoreResult {
    report: SimReport,
    selector: SelectorSummary,
    audits: Vec<FlowAudit>,
}

/// Core that owns a flow: flows are dealt round-robin by id.
pub fn core_of(flow: FlowId, cores: usize) -> usize {
    flow.0 as usize % cores
}

fn plans(s: &Scenario) -> Vec<CorePlan<'_>> {
    let links: Vec<LinkSpec> = s.links.iter().map(|l| l.spec).collect();
    (0..s.cores)
        .map(|c| CorePlan {
            core_id: c,
            scenario: s,
            links: links.clone(),
            flows: s
                .flows
                .iter()
                .filter(|f| core_of(f.flow_id, s.cores) == c)
                .cloned()
                .collect(),
        })
        .collect()
}

fn run_core(plan: CorePlan<'_>) -> Result<CoreResult, ExecError> {
    let s = plan.scenario;
    let (agent_end, sel_end) = PipePair::open(plan.core_id, s.pipe_capacity)?.split();
    let agent = Agent::new(agent_end, s.upward_pipe);
    let selector = Selector::open(plan.core_id, sel_end, s.rule, s.rules.clone())?;
    let threaded = s.mode == Mode::TwoThread;

    let (host_selector, remote) = if threaded {
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let tick = Duration::from_secs_f64(s.tick);
        let core_id = plan.core_id;
        let handle = thread::Builder::new()
            .name(format!("selector-{core_id}"))
            .spawn(move || -> Result<Selector, SelectorError> {
                let mut sel = selector;
                while !flag.load(Ordering::Acquire) {
                    let now = sel.latest_sample_time();
                    sel.tick(now)?;
                    thread::sleep(tick);
                }
                let now = sel.latest_sample_time();
                sel.tick(now)?;
                Ok(sel)
            })
            .expect("spawn selector thread");
        (None, Some((stop, handle)))
    } else {
        (Some(selector), None)
    };

    let mut host = CoreHost::new(agent, host_selector, &plan.flows);
    let mut timers = Vec::new();
    for sw in &s.switches {
        if core_of(sw.flow_id, s.cores) != plan.core_id {
            continue;
        }
        let token = host.script(SwitchCommand {
            flow_id: sw.flow_id,
            new_algorithm: sw.algorithm,
            issued_at: sw.time,
        });
        timers.push((sw.time, token));
    }
    let cfg = SimConfig {
        seed: s.seed,
        trace: s.trace,
        tick_period: (!threaded).then_some(s.tick),
    };
    let mut sim = Simulator::new(&plan.links, plan.flows.clone(), host, cfg)?;
    for (t, token) in timers {
        sim.schedule_host_timer(t, token);
    }
    let mut report = sim.run_until(s.duration);
    let mut host = sim.into_host();

    let mut selector = match remote {
        None => {
            let mut sel = host.take_selector().expect("selector present");
            // Fold whatever arrived after the last drain.
            sel.tick(s.duration)?;
            sel
        }
        Some((stop, handle)) => {
            stop.store(true, Ordering::Release);
            handle
                .join()
                .map_err(|_| ExecError::SelectorThread(plan.core_id))??
        }
    };
    if let Some(e) = host.error() {
        return Err(e.clone().into());
    }
    let summary = selector.close()?;
    report.pipes.push(PipeCounters {
        core_id: plan.core_id,
        direction: "down",
        stats: summary.down,
    });
    report.pipes.push(PipeCounters {
        core_id: plan.core_id,
        direction: "up",
        stats: summary.up,
    });
    let audits = plan
        .flows
        .iter()
        .enumerate()
        .map(|(i, f)| FlowAudit {
            flow_id: f.flow_id,
            core_id: plan.core_id,
            sample_count: host.ccb(i).map_or(0, |c| c.sample_count),
            invocations: host.invocations[i],
        })
        .collect();
    Ok(CoreResult {
        report,
        selector: summary,
        audits,
    })
}

fn run_cores(plans: Vec<CorePlan<'_>>, opts: ExecOptions) -> Vec<Result<CoreResult, ExecError>> {
    #[cfg(feature = "parallel")]
    if opts.parallel {
        use rayon::prelude::*;
        return plans.into_par_iter().map(run_core).collect();
    }
    let _ = opts;
    plans.into_iter().map(run_core).collect()
}

/// Runs a scenario, one simulator per core, and evaluates its assertions.
pub fn run(s: &Scenario, opts: ExecOptions) -> Result<RunOutput, ExecError> {
    let started = Instant::now();
    let mut reports = Vec::with_capacity(s.cores);
    let mut selectors = Vec::with_capacity(s.cores);
    let mut audits = Vec::new();
    for r in run_cores(plans(s), opts) {
        let r = r?;
        reports.push(r.report);
        selectors.push(r.selector);
        audits.extend(r.audits);
    }
    let report = SimReport::merge(reports);
    let mut classifications: Vec<Classification> = selectors
        .iter()
        .flat_map(|sel| sel.classifications.iter().copied())
        .collect();
    classifications.sort_by(|a, b| {
        a.decision_time
            .total_cmp(&b.decision_time)
            .then(a.flow_id.cmp(&b.flow_id))
    });
    audits.sort_by_key(|a| a.flow_id);
    let checks = checks::evaluate(s, &report);
    log::info!(
        "{}: {} flows, {} events in {:.2?}",
        s.name,
        report.flows.len(),
        report.events_dispatched,
        started.elapsed()
    );
    Ok(RunOutput {
        scenario: s.name.clone(),
        report,
        classifications,
        selectors,
        audits,
        checks,
    })
}

/// Runs several independent scenarios, in parallel when enabled.
pub fn run_batch(scenarios: &[Scenario], opts: ExecOptions) -> Vec<Result<RunOutput, ExecError>> {
    #[cfg(feature = "parallel")]
    if opts.parallel {
        use rayon::prelude::*;
        return scenarios.par_iter().map(|s| run(s, opts)).collect();
    }
    scenarios.iter().map(|s| run(s, opts)).collect()
}
