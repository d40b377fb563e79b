//! Scenario files.
//!
//! A flat `key = value` format. Keys before the first section are global;
//! `[link NAME]` and `[flow NAME]` open sections. `#` starts a comment.
//! See `scenarios/README.md` for the full key list.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::cc::{AlgorithmId, DEFAULT_MSS};
use crate::netsim::{FlowId, FlowSpec, JitterKind, JitterSpec, LinkSpec, TraceMode, TransferSize};
use crate::pipes::DEFAULT_CAPACITY;
use crate::selector::{Rule, RuleConfig, DEFAULT_TICK};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "line {}: {}", self.line, self.msg)
        }
    }
}

impl std::error::Error for ScenarioError {}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError {
        line,
        msg: msg.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Deterministic,
    /// Selector on its own thread, ticking on the wall clock.
    TwoThread,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deterministic" | "single_thread_deterministic" => Ok(Mode::Deterministic),
            "two-thread" | "two_thread" | "two_thread_benchmark" => Ok(Mode::TwoThread),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedSwitch {
    pub time: f64,
    pub flow_id: FlowId,
    pub algorithm: AlgorithmId,
}

/// Checks embedded in a scenario; any failure makes `run` exit nonzero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assertions {
    pub history: Vec<(FlowId, Vec<AlgorithmId>)>,
    /// Post/pre goodput ratio floor around every switch.
    pub smoothness: Option<f64>,
    pub cwnd_continuity: bool,
    pub all_complete: bool,
}

impl Assertions {
    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
            && self.smoothness.is_none()
            && !self.cwnd_continuity
            && !self.all_complete
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedLink {
    pub name: String,
    pub spec: LinkSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub duration: f64,
    pub mode: Mode,
    pub cores: usize,
    pub trace: TraceMode,
    pub tick: f64,
    pub rule: RuleConfig,
    pub rules: Vec<Rule>,
    pub upward_pipe: bool,
    pub pipe_capacity: usize,
    pub links: Vec<NamedLink>,
    pub flows: Vec<FlowSpec>,
    pub switches: Vec<ScriptedSwitch>,
    pub assertions: Assertions,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).or_else(|e| {
            err(0, format!("{}: {e}", path.display()))
        })?;
        Scenario::parse(&text)
    }

    /// Every flow runs `alg`, with no rules and no scripted switches.
    pub fn unified(&self, alg: AlgorithmId) -> Scenario {
        let mut s = self.clone();
        s.name = format!("{}-unified-{}", self.name, alg);
        s.rules.clear();
        s.switches.clear();
        s.assertions = Assertions::default();
        for f in &mut s.flows {
            f.initial_algorithm = alg;
        }
        s
    }

    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        Parser::default().run(text)
    }
}

/// `2Mbps`, `500kbps`, `1e6` (bits/second).
fn parse_bandwidth(v: &str) -> Option<f64> {
    let v = v.trim();
    let lower = v.to_ascii_lowercase();
    let (num, mult) = [("gbps", 1e9), ("mbps", 1e6), ("kbps", 1e3), ("bps", 1.0)]
        .iter()
        .find_map(|(suf, m)| lower.strip_suffix(suf).map(|n| (n.to_string(), *m)))
        .unwrap_or((lower.clone(), 1.0));
    num.trim().parse::<f64>().ok().map(|x| x * mult)
}

/// `15ms`, `250us`, `0.5s`, `2` (seconds).
fn parse_seconds(v: &str) -> Option<f64> {
    let v = v.trim();
    let (num, mult) = if let Some(n) = v.strip_suffix("ms") {
        (n, 1e-3)
    } else if let Some(n) = v.strip_suffix("us") {
        (n, 1e-6)
    } else if let Some(n) = v.strip_suffix('s') {
        (n, 1.0)
    } else {
        (v, 1.0)
    };
    num.trim().parse::<f64>().ok().map(|x| x * mult)
}

/// `4%` or `0.04`.
fn parse_ratio(v: &str) -> Option<f64> {
    let v = v.trim();
    match v.strip_suffix('%') {
        Some(n) => n.trim().parse::<f64>().ok().map(|x| x / 100.0),
        None => v.parse().ok(),
    }
}

/// `8MB`, `512KB`, `1500B`, `1500`, `unbounded`. K/M/G are binary multiples.
fn parse_size(v: &str) -> Option<TransferSize> {
    let v = v.trim();
    if v.eq_ignore_ascii_case("unbounded") {
        return Some(TransferSize::Unbounded);
    }
    let upper = v.to_ascii_uppercase();
    let stripped = upper
        .strip_suffix("IB")
        .map(|s| format!("{s}B"))
        .unwrap_or(upper);
    let (num, mult) = [("GB", 1u64 << 30), ("MB", 1 << 20), ("KB", 1 << 10), ("B", 1)]
        .iter()
        .find_map(|(suf, m)| stripped.strip_suffix(suf).map(|n| (n.to_string(), *m)))
        .unwrap_or((stripped.clone(), 1));
    let x: f64 = num.trim().parse().ok()?;
    (x >= 0.0).then(|| TransferSize::Bytes((x * mult as f64).round() as u64))
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.trim() {
        "true" | "on" | "yes" | "1" => Some(true),
        "false" | "off" | "no" | "0" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone)]
struct LinkDraft {
    name: String,
    line: usize,
    bandwidth: Option<f64>,
    prop_delay: Option<f64>,
    loss: f64,
    queue: Option<usize>,
    jitter: JitterSpec,
}

#[derive(Debug, Clone)]
struct FlowDraft {
    name: String,
    line: usize,
    link: Option<(String, usize)>,
    count: u32,
    start: f64,
    spacing: f64,
    size: TransferSize,
    algorithm: Option<AlgorithmId>,
    mss: u32,
}

enum Section {
    Global,
    Link(usize),
    Flow(usize),
}

#[derive(Default)]
struct Parser {
    name: Option<String>,
    seed: Option<u64>,
    duration: Option<f64>,
    mode: Mode,
    cores: Option<usize>,
    trace: TraceMode,
    tick: Option<f64>,
    rule: RuleConfig,
    rules_none: bool,
    upward_pipe: Option<bool>,
    pipe_capacity: Option<usize>,
    links: Vec<LinkDraft>,
    flows: Vec<FlowDraft>,
    switches: Vec<(usize, f64, u32, AlgorithmId)>,
    history: Vec<(usize, u32, Vec<AlgorithmId>)>,
    assertions: Assertions,
}

impl Parser {
    fn run(mut self, text: &str) -> Result<Scenario, ScenarioError> {
        let mut section = Section::Global;
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(head) = line.strip_prefix('[') {
                let Some(head) = head.strip_suffix(']') else {
                    return err(n, "unterminated section header");
                };
                section = self.open_section(n, head.trim())?;
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(n, format!("expected `key = value`, got `{line}`"));
            };
            let (key, value) = (key.trim(), value.trim());
            match section {
                Section::Global => self.global(n, key, value)?,
                Section::Link(l) => self.link_key(n, l, key, value)?,
                Section::Flow(f) => self.flow_key(n, f, key, value)?,
            }
        }
        self.finish()
    }

    fn open_section(&mut self, n: usize, head: &str) -> Result<Section, ScenarioError> {
        let mut parts = head.split_whitespace();
        let kind = parts.next().unwrap_or("");
        let Some(name) = parts.next() else {
            return err(n, format!("section `[{head}]` needs a name"));
        };
        if parts.next().is_some() {
            return err(n, format!("unexpected text in section header `[{head}]`"));
        }
        match kind {
            "link" => {
                if self.links.iter().any(|l| l.name == name) {
                    return err(n, format!("duplicate link `{name}`"));
                }
                self.links.push(LinkDraft {
                    name: name.to_string(),
                    line: n,
                    bandwidth: None,
                    prop_delay: None,
                    loss: 0.0,
                    queue: None,
                    jitter: JitterSpec {
                        kind: JitterKind::None,
                        ..JitterSpec::wifi_default()
                    },
                });
                Ok(Section::Link(self.links.len() - 1))
            }
            "flow" => {
                if self.flows.iter().any(|f| f.name == name) {
                    return err(n, format!("duplicate flow `{name}`"));
                }
                self.flows.push(FlowDraft {
                    name: name.to_string(),
                    line: n,
                    link: None,
                    count: 1,
                    start: 0.0,
                    spacing: 0.0,
                    size: TransferSize::Unbounded,
                    algorithm: None,
                    mss: DEFAULT_MSS,
                });
                Ok(Section::Flow(self.flows.len() - 1))
            }
            _ => err(n, format!("unknown section kind `{kind}`")),
        }
    }

    fn global(&mut self, n: usize, key: &str, v: &str) -> Result<(), ScenarioError> {
        let bad = |what: &str| err(n, format!("invalid {what} `{v}`"));
        match key {
            "name" => self.name = Some(v.to_string()),
            "seed" => match v.parse() {
                Ok(s) => self.seed = Some(s),
                Err(_) => return bad("seed"),
            },
            "duration" => match parse_seconds(v).filter(|d| *d > 0.0) {
                Some(d) => self.duration = Some(d),
                None => return bad("duration"),
            },
            "mode" => match v.parse() {
                Ok(m) => self.mode = m,
                Err(e) => return err(n, e),
            },
            "cores" => match v.parse::<usize>().ok().filter(|c| *c >= 1) {
                Some(c) => self.cores = Some(c),
                None => return bad("core count"),
            },
            "trace" => {
                self.trace = match v {
                    "full" => TraceMode::Full,
                    "summary" => TraceMode::Summary,
                    _ => return bad("trace mode"),
                }
            }
            "tick" => match parse_seconds(v).filter(|t| *t > 0.0) {
                Some(t) => self.tick = Some(t),
                None => return bad("tick"),
            },
            "n_samples" => match v.parse() {
                Ok(x) => self.rule.n_samples = x,
                Err(_) => return bad("n_samples"),
            },
            "cov_threshold" => match v.parse() {
                Ok(x) => self.rule.cov_threshold = x,
                Err(_) => return bad("cov_threshold"),
            },
            "range_threshold" => match v.parse() {
                Ok(x) => self.rule.range_threshold = x,
                Err(_) => return bad("range_threshold"),
            },
            "wifi_algorithm" => self.rule.wifi_algorithm = alg(n, v)?,
            "default_algorithm" => self.rule.default_algorithm = alg(n, v)?,
            "rules" => {
                self.rules_none = match v {
                    "wifi" => false,
                    "none" => true,
                    _ => return bad("rule set"),
                }
            }
            "upward_pipe" => match parse_bool(v) {
                Some(b) => self.upward_pipe = Some(b),
                None => return bad("upward_pipe flag"),
            },
            "pipe_capacity" => match v.parse() {
                Ok(c) => self.pipe_capacity = Some(c),
                Err(_) => return bad("pipe capacity"),
            },
            "switch" => {
                let parts: Vec<&str> = v.split_whitespace().collect();
                let [t, f, a] = parts[..] else {
                    return err(n, "switch takes `<time> <flow_id> <algorithm>`");
                };
                let Some(t) = parse_seconds(t).filter(|t| *t >= 0.0) else {
                    return err(n, format!("invalid switch time `{t}`"));
                };
                let Ok(f) = f.parse::<u32>() else {
                    return err(n, format!("invalid flow id `{f}`"));
                };
                self.switches.push((n, t, f, alg(n, a)?));
            }
            "assert_history" => {
                let Some((f, list)) = v.split_once(char::is_whitespace) else {
                    return err(n, "assert_history takes `<flow_id> <alg>,<alg>,...`");
                };
                let Ok(f) = f.parse::<u32>() else {
                    return err(n, format!("invalid flow id `{f}`"));
                };
                let algs = list
                    .split(',')
                    .map(|a| alg(n, a))
                    .collect::<Result<Vec<_>, _>>()?;
                self.history.push((n, f, algs));
            }
            "assert_smoothness" => match v.parse::<f64>().ok().filter(|r| *r > 0.0) {
                Some(r) => self.assertions.smoothness = Some(r),
                None => return bad("smoothness ratio"),
            },
            "assert_cwnd_continuity" => match parse_bool(v) {
                Some(b) => self.assertions.cwnd_continuity = b,
                None => return bad("flag"),
            },
            "assert_all_complete" => match parse_bool(v) {
                Some(b) => self.assertions.all_complete = b,
                None => return bad("flag"),
            },
            _ => return err(n, format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn link_key(&mut self, n: usize, l: usize, key: &str, v: &str) -> Result<(), ScenarioError> {
        let link = &mut self.links[l];
        let bad = |what: &str| err(n, format!("invalid {what} `{v}`"));
        match key {
            "bandwidth" => match parse_bandwidth(v).filter(|b| *b > 0.0) {
                Some(b) => link.bandwidth = Some(b),
                None => return bad("bandwidth"),
            },
            "prop_delay" => match parse_seconds(v).filter(|d| *d >= 0.0) {
                Some(d) => link.prop_delay = Some(d),
                None => return bad("delay"),
            },
            "rtt" => match parse_seconds(v).filter(|d| *d >= 0.0) {
                Some(d) => link.prop_delay = Some(d / 2.0),
                None => return bad("rtt"),
            },
            "loss" => match parse_ratio(v).filter(|r| (0.0..=1.0).contains(r)) {
                Some(r) => link.loss = r,
                None => return bad("loss ratio"),
            },
            "queue" => match v.parse::<usize>().ok().filter(|q| *q >= 1) {
                Some(q) => link.queue = Some(q),
                None => return bad("queue capacity"),
            },
            "jitter" => {
                link.jitter.kind = match v {
                    "none" => JitterKind::None,
                    "wifi_like" => JitterKind::WifiLike,
                    _ => return bad("jitter kind"),
                }
            }
            "jitter_spread" => match parse_seconds(v).filter(|d| *d >= 0.0) {
                Some(d) => link.jitter.base_spread = d,
                None => return bad("jitter spread"),
            },
            "spike_prob" => match parse_ratio(v).filter(|r| (0.0..=1.0).contains(r)) {
                Some(p) => link.jitter.spike_prob = p,
                None => return bad("spike probability"),
            },
            "spike_delay" => match parse_seconds(v).filter(|d| *d >= 0.0) {
                Some(d) => link.jitter.spike_delay = d,
                None => return bad("spike delay"),
            },
            _ => return err(n, format!("unknown link key `{key}`")),
        }
        Ok(())
    }

    fn flow_key(&mut self, n: usize, f: usize, key: &str, v: &str) -> Result<(), ScenarioError> {
        let flow = &mut self.flows[f];
        let bad = |what: &str| err(n, format!("invalid {what} `{v}`"));
        match key {
            "link" => flow.link = Some((v.to_string(), n)),
            "count" => match v.parse::<u32>().ok().filter(|c| *c >= 1) {
                Some(c) => flow.count = c,
                None => return bad("count"),
            },
            "start" => match parse_seconds(v).filter(|t| *t >= 0.0) {
                Some(t) => flow.start = t,
                None => return bad("start time"),
            },
            "spacing" => match parse_seconds(v).filter(|t| *t >= 0.0) {
                Some(t) => flow.spacing = t,
                None => return bad("spacing"),
            },
            "size" => match parse_size(v).filter(|s| *s != TransferSize::Bytes(0)) {
                Some(s) => flow.size = s,
                None => return bad("size"),
            },
            "algorithm" => flow.algorithm = Some(alg(n, v)?),
            "mss" => match v.parse::<u32>().ok().filter(|m| *m > 0) {
                Some(m) => flow.mss = m,
                None => return bad("mss"),
            },
            _ => return err(n, format!("unknown flow key `{key}`")),
        }
        Ok(())
    }

    fn finish(self) -> Result<Scenario, ScenarioError> {
        let Some(seed) = self.seed else {
            return err(0, "missing required key `seed`");
        };
        let Some(duration) = self.duration else {
            return err(0, "missing required key `duration`");
        };
        let mut links = Vec::new();
        for d in &self.links {
            let (Some(bandwidth), Some(prop_delay)) = (d.bandwidth, d.prop_delay) else {
                return err(d.line, format!("link `{}` needs bandwidth and a delay", d.name));
            };
            let spec = LinkSpec {
                bandwidth,
                prop_delay,
                loss_ratio: d.loss,
                queue_capacity: d.queue.unwrap_or(100),
                jitter: match d.jitter.kind {
                    JitterKind::None => JitterSpec::none(),
                    JitterKind::WifiLike => d.jitter,
                },
            };
            if let Err(e) = spec.validate() {
                return err(d.line, format!("link `{}`: {e}", d.name));
            }
            links.push(NamedLink {
                name: d.name.clone(),
                spec,
            });
        }
        let mut flows = Vec::new();
        for d in &self.flows {
            let Some((link_name, link_line)) = &d.link else {
                return err(d.line, format!("flow `{}` needs a link", d.name));
            };
            let Some(link) = links.iter().position(|l| &l.name == link_name) else {
                return err(*link_line, format!("unknown link `{link_name}`"));
            };
            let algorithm = d.algorithm.unwrap_or(self.rule.default_algorithm);
            for k in 0..d.count {
                flows.push(FlowSpec {
                    flow_id: FlowId(flows.len() as u32),
                    start_time: d.start + k as f64 * d.spacing,
                    transfer_size: d.size,
                    link,
                    initial_algorithm: algorithm,
                    mss: d.mss,
                    group: link_name.clone(),
                });
            }
        }
        let mut switches = Vec::new();
        for &(line, time, flow, algorithm) in &self.switches {
            if time > duration {
                return err(line, format!("switch at {time}s is past the duration"));
            }
            if flow as usize >= flows.len() {
                return err(line, format!("switch names unknown flow {flow}"));
            }
            switches.push(ScriptedSwitch {
                time,
                flow_id: FlowId(flow),
                algorithm,
            });
        }
        let mut assertions = self.assertions;
        for (line, flow, algs) in self.history {
            if flow as usize >= flows.len() {
                return err(line, format!("assert_history names unknown flow {flow}"));
            }
            assertions.history.push((FlowId(flow), algs));
        }
        if let Err(e) = self.rule.validate() {
            return err(0, e.to_string());
        }
        let pipe_capacity = self.pipe_capacity.unwrap_or(DEFAULT_CAPACITY);
        if pipe_capacity < 2 || !pipe_capacity.is_power_of_two() {
            return err(0, format!("pipe_capacity {pipe_capacity} is not a power of two >= 2"));
        }
        Ok(Scenario {
            name: self.name.unwrap_or_else(|| "scenario".into()),
            seed,
            duration,
            mode: self.mode,
            cores: self.cores.unwrap_or(1),
            trace: self.trace,
            tick: self.tick.unwrap_or(DEFAULT_TICK),
            rule: self.rule,
            rules: if self.rules_none { vec![] } else { vec![Rule::Wifi] },
            upward_pipe: self.upward_pipe.unwrap_or(true),
            pipe_capacity,
            links,
            flows,
            switches,
            assertions,
        })
    }
}

fn alg(n: usize, v: &str) -> Result<AlgorithmId, ScenarioError> {
    v.trim().parse().or_else(|e| err(n, format!("{e}")))
}
