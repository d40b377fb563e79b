use std::collections::VecDeque;

use rand::Rng;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JitterKind {
    #[default]
    None,
    WifiLike,
}

/// Extra one-way delay added to each surviving data packet.
///
/// `wifi_like` draws `uniform(0, base_spread)` and, with probability
/// `spike_prob`, adds `spike_delay` on top.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JitterSpec {
    pub kind: JitterKind,
    pub base_spread: f64,
    pub spike_prob: f64,
    pub spike_delay: f64,
}

impl JitterSpec {
    pub fn none() -> Self {
        JitterSpec::default()
    }

    /// The stock wifi-like profile: 20 ms spread, 5% chance of an 80 ms spike.
    pub fn wifi_default() -> Self {
        JitterSpec::wifi_like(0.020, 0.05, 0.080)
    }

    pub fn wifi_like(base_spread: f64, spike_prob: f64, spike_delay: f64) -> Self {
        JitterSpec {
            kind: JitterKind::WifiLike,
            base_spread,
            spike_prob,
            spike_delay,
        }
    }

    /// Analytic mean of [`sample_jitter`].
    pub fn mean(&self) -> f64 {
        match self.kind {
            JitterKind::None => 0.0,
            JitterKind::WifiLike => self.base_spread / 2.0 + self.spike_prob * self.spike_delay,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.base_spread >= 0.0
            && self.spike_delay >= 0.0
            && (0.0..=1.0).contains(&self.spike_prob);
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidJitter(*self))
        }
    }
}

pub fn sample_jitter<R: Rng + ?Sized>(spec: &JitterSpec, rng: &mut R) -> f64 {
    match spec.kind {
        JitterKind::None => 0.0,
        JitterKind::WifiLike => {
            let mut d = 0.0;
            if spec.base_spread > 0.0 {
                d += rng.gen_range(0.0..spec.base_spread);
            }
            if spec.spike_prob > 0.0 && rng.gen_bool(spec.spike_prob) {
                d += spec.spike_delay;
            }
            d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    /// Bits per second.
    pub bandwidth: f64,
    /// One-way, seconds.
    pub prop_delay: f64,
    pub loss_ratio: f64,
    /// Packets, including the one being serialized.
    pub queue_capacity: usize,
    pub jitter: JitterSpec,
}

impl LinkSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.bandwidth > 0.0) {
            return Err(SimError::InvalidLink("bandwidth must be > 0"));
        }
        if !(self.prop_delay >= 0.0) {
            return Err(SimError::InvalidLink("prop_delay must be >= 0"));
        }
        // 1.0 is admitted so a black-hole path can be modelled.
        if !(0.0..=1.0).contains(&self.loss_ratio) {
            return Err(SimError::InvalidLink("loss_ratio must be in [0, 1]"));
        }
        if self.queue_capacity == 0 {
            return Err(SimError::InvalidLink("queue_capacity must be >= 1"));
        }
        self.jitter.validate()
    }

    pub fn serialization(&self, bytes: u64) -> f64 {
        bytes as f64 * 8.0 / self.bandwidth
    }

    /// Round trip without queueing or jitter.
    pub fn base_rtt(&self) -> f64 {
        2.0 * self.prop_delay
    }
}

/// Droptail FIFO in front of a serializing link.
#[derive(Debug, Clone)]
pub(crate) struct Bottleneck {
    /// Departure times of packets still queued or in service.
    departures: VecDeque<f64>,
    busy_until: f64,
    capacity: usize,
}

impl Bottleneck {
    pub(crate) fn new(capacity: usize) -> Self {
        Bottleneck {
            departures: VecDeque::with_capacity(capacity),
            busy_until: 0.0,
            capacity,
        }
    }

    /// Admits a packet arriving at `now`; returns its departure time, or
    /// `None` when the queue is full.
    pub(crate) fn enqueue(&mut self, now: f64, serialization: f64) -> Option<f64> {
        while self.departures.front().is_some_and(|&d| d <= now) {
            self.departures.pop_front();
        }
        if self.departures.len() >= self.capacity {
            return None;
        }
        let depart = self.busy_until.max(now) + serialization;
        self.busy_until = depart;
        self.departures.push_back(depart);
        Some(depart)
    }
}
