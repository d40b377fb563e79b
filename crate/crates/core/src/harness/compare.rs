use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::Path;

use crate::netsim::{FlowId, SimReport};

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("need at least two runs to compare, got {0}")]
    TooFewRuns(usize),
    #[error("runs `{0}` and `{1}` cover different flow sets")]
    FlowSetMismatch(String, String),
    #[error("flow {1} did not finish in run `{0}`")]
    Unfinished(String, FlowId),
    #[error("{0}: {1}")]
    Io(String, io::Error),
    #[error("{0}:{1}: {2}")]
    Parse(String, usize, String),
}

/// Completion times of one run, keyed by flow.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFlows {
    pub name: String,
    pub flows: BTreeMap<FlowId, (Option<f64>, String)>,
}

impl RunFlows {
    pub fn from_report(name: &str, report: &SimReport) -> RunFlows {
        RunFlows {
            name: name.to_string(),
            flows: report
                .flows
                .iter()
                .map(|f| (f.flow_id, (f.fct, f.group.clone())))
                .collect(),
        }
    }

    /// Reads `flows.csv` from a run's output directory.
    pub fn load(dir: &Path) -> Result<RunFlows, CompareError> {
        let path = dir.join("flows.csv");
        let shown = path.display().to_string();
        let mut rd = csv::Reader::from_path(&path).map_err(|e| CompareError::Io(shown.clone(), e.into()))?;
        let header = rd
            .headers()
            .map_err(|e| CompareError::Parse(shown.clone(), 1, e.to_string()))?
            .clone();
        let col = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CompareError::Parse(shown.clone(), 1, format!("missing column `{name}`")))
        };
        let (id_col, fct_col, group_col) = (col("flow_id")?, col("fct_s")?, col("group")?);
        let mut flows = BTreeMap::new();
        for (i, rec) in rd.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| CompareError::Parse(shown.clone(), line, e.to_string()))?;
            let bad = |m: &str| CompareError::Parse(shown.clone(), line, m.to_string());
            let id: u32 = rec
                .get(id_col)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad("bad flow_id"))?;
            let fct = match rec.get(fct_col) {
                Some("") | None => None,
                Some(c) => Some(c.parse::<f64>().map_err(|_| bad("bad fct_s"))?),
            };
            let group = rec.get(group_col).unwrap_or("").to_string();
            flows.insert(FlowId(id), (fct, group));
        }
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        Ok(RunFlows { name, flows })
    }

    fn fcts(&self) -> Result<Vec<(FlowId, f64, &str)>, CompareError> {
        self.flows
            .iter()
            .map(|(id, (fct, g))| {
                fct.map(|t| (*id, t, g.as_str()))
                    .ok_or_else(|| CompareError::Unfinished(self.name.clone(), *id))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub names: Vec<String>,
    /// Per run, completion times in ascending order.
    pub sorted: Vec<Vec<f64>>,
    /// Mean completion time per group, one entry per run.
    pub group_means: BTreeMap<String, Vec<f64>>,
    pub overall_means: Vec<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

pub fn compare_runs(runs: &[RunFlows]) -> Result<Comparison, CompareError> {
    if runs.len() < 2 {
        return Err(CompareError::TooFewRuns(runs.len()));
    }
    for r in &runs[1..] {
        if !r.flows.keys().eq(runs[0].flows.keys()) {
            return Err(CompareError::FlowSetMismatch(runs[0].name.clone(), r.name.clone()));
        }
    }
    let mut sorted = Vec::new();
    let mut overall = Vec::new();
    let mut group_means: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in runs {
        let fcts = r.fcts()?;
        let mut s: Vec<f64> = fcts.iter().map(|x| x.1).collect();
        s.sort_by(f64::total_cmp);
        overall.push(mean(s.iter().copied()));
        sorted.push(s);
        let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (_, t, g) in &fcts {
            groups.entry(g).or_default().push(*t);
        }
        for (g, ts) in groups {
            group_means
                .entry(g.to_string())
                .or_default()
                .push(mean(ts.into_iter()));
        }
    }
    Ok(Comparison {
        names: runs.iter().map(|r| r.name.clone()).collect(),
        sorted,
        group_means,
        overall_means: overall,
    })
}

impl Comparison {
    pub fn mean_of(&self, run: &str, group: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == run)?;
        self.group_means.get(group).map(|v| v[i])
    }

    pub fn write_sorted_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "rank,{}", self.names.join(","))?;
        let n = self.sorted.first().map_or(0, Vec::len);
        for i in 0..n {
            let row: Vec<String> = self.sorted.iter().map(|s| s[i].to_string()).collect();
            writeln!(w, "{},{}", i + 1, row.join(","))?;
        }
        Ok(())
    }

    pub fn write_means_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "group,{}", self.names.join(","))?;
        for (g, means) in &self.group_means {
            let row: Vec<String> = means.iter().map(|m| m.to_string()).collect();
            writeln!(w, "{g},{}", row.join(","))?;
        }
        let row: Vec<String> = self.overall_means.iter().map(|m| m.to_string()).collect();
        writeln!(w, "all,{}", row.join(","))
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<12}", "mean FCT (s)")?;
        for n in &self.names {
            write!(f, " {n:>24}")?;
        }
        writeln!(f)?;
        let rows = self
            .group_means
            .iter()
            .map(|(g, m)| (g.as_str(), m))
            .chain(std::iter::once(("all", &self.overall_means)));
        for (g, means) in rows {
            write!(f, "{g:<12}")?;
            for m in means {
                write!(f, " {m:>24.3}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
