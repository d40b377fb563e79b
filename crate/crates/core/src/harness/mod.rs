//! Scenario loading, wiring and output.
//!
//! Flows are dealt to cores round-robin. Every core gets its own agent,
//! selector and pipe pair and its own simulator; cores share nothing, so
//! they run on the rayon pool when the `parallel` feature is on and one
//! after another otherwise, with identical results.

pub mod bench;
pub mod checks;
pub mod compare;
mod exec;
mod host;
pub mod scenario;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub use exec::{core_of, run, run_batch, ExecError, ExecOptions, FlowAudit, RunOutput};
pub use host::CoreHost;
pub use scenario::{Mode, Scenario, ScenarioError};

use crate::selector::write_classification_csv;

fn emit(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    body(&mut w)?;
    w.flush()
}

/// Writes every CSV of a run into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let r = &out.report;
    emit(dir, "trace.csv", |w| r.write_trace_csv(w))?;
    emit(dir, "flows.csv", |w| r.write_flows_csv(w))?;
    emit(dir, "switches.csv", |w| r.write_switches_csv(w))?;
    emit(dir, "pipes.csv", |w| r.write_pipes_csv(w))?;
    emit(dir, "throughput.csv", |w| r.write_throughput_csv(w))?;
    emit(dir, "classification.csv", |w| {
        write_classification_csv(&out.classifications, w)
    })?;
    emit(dir, "checks.csv", |w| {
        writeln!(w, "check,passed,detail")?;
        for c in &out.checks {
            writeln!(w, "{},{},\"{}\"", c.name, c.passed, c.detail)?;
        }
        Ok(())
    })
}
