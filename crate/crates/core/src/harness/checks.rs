use crate::netsim::{SimReport, TraceEvent};
use crate::switcher::SwitchRecord;

use super::scenario::Scenario;

/// Goodput comparison window on each side of a switch, seconds.
pub const SMOOTHNESS_WINDOW: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchWindow {
    pub switch: SwitchRecord,
    pub pre_bps: f64,
    pub post_bps: f64,
}

impl SwitchWindow {
    pub fn ratio(&self) -> f64 {
        if self.pre_bps > 0.0 {
            self.post_bps / self.pre_bps
        } else {
            f64::INFINITY
        }
    }
}

/// Mean goodput over `window` seconds before and after every switch.
pub fn switch_windows(report: &SimReport, window: f64) -> Vec<SwitchWindow> {
    report
        .switches
        .iter()
        .filter_map(|sw| {
            let f = report.flow(sw.flow_id)?;
            Some(SwitchWindow {
                switch: *sw,
                pre_bps: f.goodput_between(sw.time - window, sw.time),
                post_bps: f.goodput_between(sw.time, sw.time + window),
            })
        })
        .collect()
}

/// For each switch: the cwnd recorded just before it, and whether it is
/// bit-identical to both sides of the switch record.
pub fn cwnd_continuity(report: &SimReport) -> Vec<(SwitchRecord, Option<f64>, bool)> {
    let mut out = Vec::new();
    for (i, row) in report.trace.iter().enumerate() {
        if row.event != TraceEvent::Switch {
            continue;
        }
        let Some(sw) = report
            .switches
            .iter()
            .find(|s| s.flow_id == row.flow_id && s.time == row.time)
        else {
            continue;
        };
        let before = report.trace[..i]
            .iter()
            .rev()
            .find(|r| r.flow_id == row.flow_id)
            .map(|r| r.cwnd_pkts);
        let same = |a: f64, b: f64| a.to_bits() == b.to_bits();
        let ok = same(sw.cwnd_at_switch, sw.cwnd_after)
            && same(sw.cwnd_after, row.cwnd_pkts)
            && before.is_none_or(|b| same(b, sw.cwnd_at_switch));
        out.push((*sw, before, ok));
    }
    out
}

pub fn evaluate(s: &Scenario, report: &SimReport) -> Vec<Check> {
    let a = &s.assertions;
    let mut out = Vec::new();
    for (flow, expected) in &a.history {
        let got = report
            .flow(*flow)
            .map(|f| f.algorithm_history.clone())
            .unwrap_or_default();
        let fmt = |v: &[crate::cc::AlgorithmId]| {
            v.iter().map(|x| x.name()).collect::<Vec<_>>().join(",")
        };
        out.push(Check {
            name: format!("history of flow {flow}"),
            passed: &got == expected,
            detail: format!("expected [{}], got [{}]", fmt(expected), fmt(&got)),
        });
    }
    if let Some(floor) = a.smoothness {
        let windows = switch_windows(report, SMOOTHNESS_WINDOW);
        let worst = windows.iter().map(|w| w.ratio()).fold(f64::INFINITY, f64::min);
        out.push(Check {
            name: "switch smoothness".into(),
            passed: !windows.is_empty() && worst >= floor,
            detail: format!(
                "{} switches, worst post/pre goodput ratio {worst:.3} (floor {floor})",
                windows.len()
            ),
        });
    }
    if a.cwnd_continuity {
        let rows = cwnd_continuity(report);
        let bad = rows.iter().filter(|r| !r.2).count();
        out.push(Check {
            name: "cwnd continuity".into(),
            passed: !rows.is_empty() && bad == 0,
            detail: format!("{} switches, {bad} discontinuous", rows.len()),
        });
    }
    if a.all_complete {
        let unfinished = report.flows.iter().filter(|f| f.fct.is_none()).count();
        out.push(Check {
            name: "all flows complete".into(),
            passed: unfinished == 0,
            detail: format!("{unfinished} of {} unfinished", report.flows.len()),
        });
    }
    out
}
