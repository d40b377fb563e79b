//! User-space congestion-control switching.
//!
//! A per-core [`agent::Agent`] collects one telemetry record per ack into a
//! lock-free ring ([`pipes`]); a [`selector::Selector`] drains it on a timer,
//! classifies flows, and sends switch commands back down. The
//! [`switcher`] swaps a flow's algorithm ([`cc`]) mid-flight while keeping
//! its sending rate. [`netsim`] supplies deterministic network conditions
//! and [`harness`] wires everything into runnable scenarios.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod cc;
pub mod harness;
pub mod netsim;
pub mod pipes;
pub mod selector;
pub mod switcher;
