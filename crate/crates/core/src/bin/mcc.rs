use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mcc::cc::AlgorithmId;
use mcc::harness::compare::{compare_runs, RunFlows};
use mcc::harness::{self, bench, ExecOptions, Mode, Scenario};

#[derive(Parser)]
#[command(name = "mcc", version, about = "Congestion-control switching experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file and write its CSVs.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// deterministic | two-thread
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        cores: Option<usize>,
        /// Run every flow with one algorithm and no rules.
        #[arg(long)]
        unified: Option<AlgorithmId>,
        /// Run cores one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Pipe and selector micro-benchmarks.
    Bench {
        #[arg(long, default_value_t = 1_000_000)]
        records: u64,
    },
    /// Compare flow completion times across run directories.
    Compare {
        #[arg(required = true, num_args = 2..)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MCC_LOG", "warn")).init();
    match Cli::parse().cmd {
        Cmd::Run {
            scenario,
            seed,
            out_dir,
            mode,
            cores,
            unified,
            sequential,
        } => {
            let mut s = match Scenario::load(&scenario) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{}: {e}", scenario.display());
                    return ExitCode::from(2);
                }
            };
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(mode) = mode {
                s.mode = mode;
            }
            if let Some(c) = cores.filter(|c| *c > 0) {
                s.cores = c;
            }
            if let Some(alg) = unified {
                s = s.unified(alg);
            }
            let opts = ExecOptions {
                parallel: !sequential && ExecOptions::default().parallel,
            };
            let out = match harness::run(&s, opts) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("run failed: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Err(e) = harness::write_outputs(&out_dir, &out) {
                eprintln!("{}: {e}", out_dir.display());
                return ExitCode::from(2);
            }
            for f in &out.report.flows {
                log::info!(
                    "flow {} fct {:?} history {:?}",
                    f.flow_id,
                    f.fct,
                    f.algorithm_history
                );
            }
            for c in &out.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!(
                "{}: {} flows, {} switches, outputs in {}",
                out.scenario,
                out.report.flows.len(),
                out.report.switches.len(),
                out_dir.display()
            );
            if out.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Cmd::Bench { records } => {
            print!("{}", bench::run_bench(records.max(1)));
            ExitCode::SUCCESS
        }
        Cmd::Compare { dirs, out_dir } => {
            let runs: Result<Vec<_>, _> = dirs.iter().map(|d| RunFlows::load(d)).collect();
            let cmp = match runs.and_then(|r| compare_runs(&r)) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("compare failed: {e}");
                    return ExitCode::from(2);
                }
            };
            print!("{cmp}");
            if let Some(dir) = out_dir {
                let res = std::fs::create_dir_all(&dir)
                    .and_then(|_| cmp.write_sorted_csv(std::fs::File::create(dir.join("sorted_fct.csv"))?))
                    .and_then(|_| cmp.write_means_csv(std::fs::File::create(dir.join("mean_fct.csv"))?));
                if let Err(e) = res {
                    eprintln!("{}: {e}", dir.display());
                    return ExitCode::from(2);
                }
            }
            ExitCode::SUCCESS
        }
    }
}
