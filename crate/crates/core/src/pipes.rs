//! Fixed-capacity single-producer/single-consumer rings.
//!
//! A ring is allocated once, at open time, and never grows. The producer
//! and consumer halves each own one monotone counter (`head` for writes,
//! `tail` for reads) and only ever load the other's with acquire ordering,
//! so a push or drain is a handful of loads and one release store.
//!
//! A full ring drops the newest record and counts it; the producer is never
//! blocked. Halves are `Send` but not `Clone`, so one producer and one
//! consumer per ring is enforced by ownership. Both halves may also live on
//! the same thread, which is how the deterministic simulator drives them.

use std::cell::UnsafeCell;
use std::fmt;
use std::mem::MaybeUninit;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use crate::agent::AckSample;
use crate::switcher::SwitchCommand;

/// Records per ring unless a scenario overrides it.
pub const DEFAULT_CAPACITY: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PipeError {
    #[error("pipe capacity {0} is not a power of two >= 2")]
    InvalidCapacity(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[must_use]
pub enum PushOutcome {
    Ok,
    DroppedOverflow,
}

/// Counters readable from either half at any time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PipeStats {
    pub capacity: usize,
    pub pushed: u64,
    pub drained: u64,
    pub overflow: u64,
}

impl PipeStats {
    /// Records written but not yet drained.
    pub fn in_ring(&self) -> u64 {
        self.pushed - self.drained
    }
}

#[repr(align(64))]
struct CacheLine<T>(T);

struct Ring<T> {
    head: CacheLine<AtomicUsize>,
    tail: CacheLine<AtomicUsize>,
    overflow: AtomicU64,
    slots: Box<[UnsafeCell<MaybeUninit<T>>]>,
    mask: usize,
}

// Slots are only written by the producer at indices the consumer has
// released, and only read by the consumer at indices the producer has
// published; `head`/`tail` carry the happens-before edges.
unsafe impl<T: Send> Sync for Ring<T> {}
unsafe impl<T: Send> Send for Ring<T> {}

impl<T> Ring<T> {
    fn stats(&self) -> PipeStats {
        let head = self.head.0.load(Ordering::Acquire);
        let tail = self.tail.0.load(Ordering::Acquire);
        PipeStats {
            capacity: self.mask + 1,
            pushed: head as u64,
            drained: tail as u64,
            overflow: self.overflow.load(Ordering::Relaxed),
        }
    }
}

/// Opens a ring of `capacity` records and returns its two halves.
pub fn ring<T: Copy + Send>(capacity: usize) -> Result<(Producer<T>, Consumer<T>), PipeError> {
    if capacity < 2 || !capacity.is_power_of_two() {
        return Err(PipeError::InvalidCapacity(capacity));
    }
    let slots = (0..capacity)
        .map(|_| UnsafeCell::new(MaybeUninit::uninit()))
        .collect::<Vec<_>>()
        .into_boxed_slice();
    let ring = Arc::new(Ring {
        head: CacheLine(AtomicUsize::new(0)),
        tail: CacheLine(AtomicUsize::new(0)),
        overflow: AtomicU64::new(0),
        slots,
        mask: capacity - 1,
    });
    Ok((
        Producer {
            ring: Arc::clone(&ring),
            head: 0,
            cached_tail: 0,
        },
        Consumer {
            ring,
            tail: 0,
            cached_head: 0,
        },
    ))
}

pub struct Producer<T> {
    ring: Arc<Ring<T>>,
    head: usize,
    cached_tail: usize,
}

impl<T: Copy + Send> Producer<T> {
    /// Stores `rec` unless the ring is full, in which case the record is
    /// discarded and the overflow counter bumped.
    #[inline]
    pub fn push(&mut self, rec: T) -> PushOutcome {
        let ring = &*self.ring;
        if self.head.wrapping_sub(self.cached_tail) > ring.mask {
            self.cached_tail = ring.tail.0.load(Ordering::Acquire);
            if self.head.wrapping_sub(self.cached_tail) > ring.mask {
                ring.overflow.fetch_add(1, Ordering::Relaxed);
                return PushOutcome::DroppedOverflow;
            }
        }
        let slot = &ring.slots[self.head & ring.mask];
        // SAFETY: the consumer has released this slot (head - tail < capacity)
        // and will not read it until `head` is published below.
        unsafe { (*slot.get()).write(rec) };
        self.head = self.head.wrapping_add(1);
        ring.head.0.store(self.head, Ordering::Release);
        PushOutcome::Ok
    }

    pub fn capacity(&self) -> usize {
        self.ring.mask + 1
    }

    pub fn stats(&self) -> PipeStats {
        self.ring.stats()
    }
}

pub struct Consumer<T> {
    ring: Arc<Ring<T>>,
    tail: usize,
    cached_head: usize,
}

impl<T: Copy + Send> Consumer<T> {
    /// Hands up to `max` of the oldest records to `f`, in production order,
    /// and returns how many were consumed. Never allocates.
    #[inline]
    pub fn drain_with(&mut self, max: usize, mut f: impl FnMut(T)) -> usize {
        let ring = &*self.ring;
        if self.cached_head.wrapping_sub(self.tail) < max {
            self.cached_head = ring.head.0.load(Ordering::Acquire);
        }
        let available = self.cached_head.wrapping_sub(self.tail);
        let n = available.min(max);
        for i in 0..n {
            let slot = &ring.slots[self.tail.wrapping_add(i) & ring.mask];
            // SAFETY: the producer published this slot before `head` and will
            // not overwrite it until `tail` moves past it.
            f(unsafe { (*slot.get()).assume_init() });
        }
        if n > 0 {
            self.tail = self.tail.wrapping_add(n);
            ring.tail.0.store(self.tail, Ordering::Release);
        }
        n
    }

    /// Appends up to `max` records to `out`.
    pub fn drain_into(&mut self, out: &mut Vec<T>, max: usize) -> usize {
        self.drain_with(max, |rec| out.push(rec))
    }

    /// Convenience form returning a fresh vector.
    pub fn drain_batch(&mut self, max: usize) -> Vec<T> {
        let mut out = Vec::new();
        self.drain_into(&mut out, max);
        out
    }

    pub fn len(&self) -> usize {
        self.ring.head.0.load(Ordering::Acquire).wrapping_sub(self.tail)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn capacity(&self) -> usize {
        self.ring.mask + 1
    }

    pub fn stats(&self) -> PipeStats {
        self.ring.stats()
    }
}

impl<T> fmt::Debug for Producer<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Producer")
            .field("stats", &self.ring.stats())
            .finish()
    }
}

impl<T> fmt::Debug for Consumer<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Consumer")
            .field("stats", &self.ring.stats())
            .finish()
    }
}

/// Agent side of a pipe pair: writes samples up, reads commands down.
#[derive(Debug)]
pub struct AgentEnd {
    pub up: Producer<AckSample>,
    pub down: Consumer<SwitchCommand>,
}

/// Selector side of a pipe pair.
#[derive(Debug)]
pub struct SelectorEnd {
    pub up: Consumer<AckSample>,
    pub down: Producer<SwitchCommand>,
}

/// The two rings serving one core.
#[derive(Debug)]
pub struct PipePair {
    pub core_id: usize,
    pub agent: AgentEnd,
    pub selector: SelectorEnd,
}

impl PipePair {
    pub fn open(core_id: usize, capacity: usize) -> Result<PipePair, PipeError> {
        let (up_tx, up_rx) = ring(capacity)?;
        let (down_tx, down_rx) = ring(capacity)?;
        Ok(PipePair {
            core_id,
            agent: AgentEnd {
                up: up_tx,
                down: down_rx,
            },
            selector: SelectorEnd {
                up: up_rx,
                down: down_tx,
            },
        })
    }

    pub fn split(self) -> (AgentEnd, SelectorEnd) {
        (self.agent, self.selector)
    }
}
