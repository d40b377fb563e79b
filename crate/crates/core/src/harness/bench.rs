//! Wall-clock micro-benchmarks behind `mcc bench`.

use std::collections::VecDeque;
use std::fmt;
use std::hint;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crate::agent::AckSample;
use crate::netsim::FlowId;
use crate::pipes::{self, PipePair, PushOutcome};
use crate::selector::{RuleConfig, Rule, Selector};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub name: &'static str,
    pub records: u64,
    pub elapsed: Duration,
}

impl BenchRow {
    pub fn ns_per_record(&self) -> f64 {
        self.elapsed.as_secs_f64() * 1e9 / self.records as f64
    }

    pub fn records_per_sec(&self) -> f64 {
        self.records as f64 / self.elapsed.as_secs_f64()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn row(&self, name: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

impl fmt::Display for BenchTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<28} {:>12} {:>12} {:>16}", "case", "records", "ns/record", "records/s")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<28} {:>12} {:>12.1} {:>16.0}",
                r.name,
                r.records,
                r.ns_per_record(),
                r.records_per_sec()
            )?;
        }
        Ok(())
    }
}

pub fn sample(i: u64) -> AckSample {
    AckSample {
        flow_id: FlowId((i % 64) as u32),
        timestamp: i as f64 * 1e-6,
        rtt: Some(0.03 + (i % 7) as f64 * 1e-3),
        acked_bytes: 1500,
        delivery_rate: 250_000.0,
        loss_event: false,
        cumulative_retransmits: 0,
        ece: false,
    }
}

/// Two threads move `records` samples through the SPSC ring; the producer
/// yields while the ring is full, so every record crosses.
pub fn spsc_transfer(records: u64, capacity: usize) -> Duration {
    let (mut tx, mut rx) = pipes::ring::<AckSample>(capacity).expect("valid capacity");
    let start = Instant::now();
    let consumer = thread::spawn(move || {
        let mut got = 0u64;
        let mut check = 0.0;
        while got < records {
            let n = rx.drain_with(usize::MAX, |s| check += s.acked_bytes as f64);
            if n == 0 {
                // Yield rather than spin so a single-CPU host still makes progress.
                thread::yield_now();
            }
            got += n as u64;
        }
        check
    });
    for i in 0..records {
        let s = sample(i);
        while tx.push(s) == PushOutcome::DroppedOverflow {
            thread::yield_now();
        }
    }
    let check = consumer.join().expect("consumer thread");
    hint::black_box(check);
    start.elapsed()
}

/// Baseline: one heap allocation per record behind a mutex, and a copy
/// out into a fresh vector per drain.
pub fn naive_transfer(records: u64) -> Duration {
    let q: Arc<Mutex<VecDeque<Box<AckSample>>>> = Arc::new(Mutex::new(VecDeque::new()));
    let qc = Arc::clone(&q);
    let start = Instant::now();
    let consumer = thread::spawn(move || {
        let mut got = 0u64;
        let mut check = 0.0;
        while got < records {
            let batch: Vec<AckSample> = qc.lock().expect("lock").drain(..).map(|b| *b).collect();
            if batch.is_empty() {
                hint::spin_loop();
            }
            for s in &batch {
                check += s.acked_bytes as f64;
            }
            got += batch.len() as u64;
        }
        check
    });
    for i in 0..records {
        let rec = Box::new(sample(i));
        q.lock().expect("lock").push_back(rec);
    }
    let check = consumer.join().expect("consumer thread");
    hint::black_box(check);
    start.elapsed()
}

/// Selector drain + fold + rule evaluation, per sample.
pub fn selector_fold(records: u64) -> Duration {
    let cap = 4096;
    let (mut agent, sel_end) = PipePair::open(0, cap).expect("valid capacity").split();
    let mut sel = Selector::open(0, sel_end, RuleConfig::default(), vec![Rule::Wifi])
        .expect("default config");
    let mut elapsed = Duration::ZERO;
    let mut i = 0;
    while i < records {
        let n = (records - i).min(cap as u64);
        for k in 0..n {
            let _ = agent.up.push(sample(i + k));
        }
        let t = Instant::now();
        hint::black_box(sel.tick((i + n) as f64 * 1e-6).expect("open selector"));
        elapsed += t.elapsed();
        agent.down.drain_with(usize::MAX, |c| {
            hint::black_box(c);
        });
        i += n;
    }
    elapsed
}

pub fn run_bench(records: u64) -> BenchTable {
    BenchTable {
        rows: vec![
            BenchRow {
                name: "spsc_pipe",
                records,
                elapsed: spsc_transfer(records, 1024),
            },
            BenchRow {
                name: "naive_alloc_copy",
                records,
                elapsed: naive_transfer(records),
            },
            BenchRow {
                name: "selector_fold",
                records,
                elapsed: selector_fold(records),
            },
        ],
    }
}
