use std::collections::VecDeque;

use crate::cc::AlgorithmId;

use super::{FlowId, SimError};

/// Duplicate-ack equivalents that declare a transmission lost.
pub const DUP_THRESH: u8 = 3;
pub const INITIAL_RTO: f64 = 1.0;
pub const MIN_RTO: f64 = 0.2;
pub const MAX_RTO: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferSize {
    Bytes(u64),
    Unbounded,
}

impl TransferSize {
    pub fn bytes(&self) -> Option<u64> {
        match *self {
            TransferSize::Bytes(b) => Some(b),
            TransferSize::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub flow_id: FlowId,
    pub start_time: f64,
    pub transfer_size: TransferSize,
    /// Index into the simulator's link table.
    pub link: usize,
    pub initial_algorithm: AlgorithmId,
    pub mss: u32,
    /// Free-form label used to aggregate results (e.g. the link name).
    pub group: String,
}

impl FlowSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.mss == 0 {
            return Err(SimError::InvalidFlow(self.flow_id, "mss must be > 0"));
        }
        if self.transfer_size == TransferSize::Bytes(0) {
            return Err(SimError::InvalidFlow(
                self.flow_id,
                "transfer size must be > 0 or unbounded",
            ));
        }
        if !(self.start_time >= 0.0) {
            return Err(SimError::InvalidFlow(self.flow_id, "start time must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TxRecord {
    pub tx_id: u64,
    pub seq: u64,
    pub bytes: u32,
    pub sent_at: f64,
    pub delivered_at_send: u64,
    /// When `delivered` last moved, as seen at send time.
    pub delivered_time_at_send: f64,
    pub lost: bool,
    /// Later transmissions acked while this one was outstanding.
    pub acked_after: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct AckOutcome {
    pub rtt: f64,
    /// Bytes of data acked for the first time; 0 for a duplicate delivery.
    pub new_bytes: u64,
    pub delivery_rate: f64,
    pub loss_detected: bool,
    pub round_end: bool,
    pub completed: bool,
}

/// Sender-side transport bookkeeping: sequence space, outstanding
/// transmissions, loss detection, rounds and the retransmission timer.
#[derive(Debug, Clone)]
pub(crate) struct Sender {
    mss: u32,
    total_pkts: Option<u64>,
    last_pkt_bytes: u32,
    next_seq: u64,
    next_tx: u64,
    /// Unacked transmissions in send order; lost ones linger until a later
    /// ack proves they will never arrive.
    records: VecDeque<TxRecord>,
    retx: VecDeque<u64>,
    acked: Vec<bool>,
    acked_pkts: u64,
    pub in_flight: u64,
    pub delivered: u64,
    delivered_time: f64,
    next_round_delivered: u64,
    recovery_point: Option<u64>,
    srtt: Option<f64>,
    rttvar: f64,
    backoff: f64,
    pub cumulative_retransmits: u64,
    pub rto_count: u64,
}

impl Sender {
    pub(crate) fn new(spec: &FlowSpec) -> Sender {
        let mss = spec.mss;
        let (total_pkts, last_pkt_bytes) = match spec.transfer_size {
            TransferSize::Bytes(b) => {
                let n = b.div_ceil(mss as u64);
                (Some(n), (b - (n - 1) * mss as u64) as u32)
            }
            TransferSize::Unbounded => (None, mss),
        };
        Sender {
            mss,
            total_pkts,
            last_pkt_bytes,
            next_seq: 0,
            next_tx: 0,
            records: VecDeque::new(),
            retx: VecDeque::new(),
            acked: Vec::new(),
            acked_pkts: 0,
            in_flight: 0,
            delivered: 0,
            delivered_time: 0.0,
            next_round_delivered: 0,
            recovery_point: None,
            srtt: None,
            rttvar: 0.0,
            backoff: 1.0,
            cumulative_retransmits: 0,
            rto_count: 0,
        }
    }

    fn pkt_bytes(&self, seq: u64) -> u32 {
        match self.total_pkts {
            Some(n) if seq + 1 == n => self.last_pkt_bytes,
            _ => self.mss,
        }
    }

    fn is_acked(&self, seq: u64) -> bool {
        self.acked.get(seq as usize).copied().unwrap_or(false)
    }

    /// Next packet to put on the wire: retransmissions first.
    pub(crate) fn peek_next(&mut self) -> Option<(u64, u32)> {
        while let Some(&seq) = self.retx.front() {
            if self.is_acked(seq) {
                self.retx.pop_front();
            } else {
                return Some((seq, self.pkt_bytes(seq)));
            }
        }
        match self.total_pkts {
            Some(n) if self.next_seq >= n => None,
            _ => Some((self.next_seq, self.pkt_bytes(self.next_seq))),
        }
    }

    /// Records the transmission of the packet last returned by `peek_next`.
    pub(crate) fn on_send(&mut self, seq: u64, now: f64) -> TxRecord {
        if self.retx.front() == Some(&seq) {
            self.retx.pop_front();
        } else {
            debug_assert_eq!(seq, self.next_seq);
            self.next_seq += 1;
        }
        if self.in_flight == 0 {
            self.delivered_time = now;
        }
        let rec = TxRecord {
            tx_id: self.next_tx,
            seq,
            bytes: self.pkt_bytes(seq),
            sent_at: now,
            delivered_at_send: self.delivered,
            delivered_time_at_send: self.delivered_time,
            lost: false,
            acked_after: 0,
        };
        self.next_tx += 1;
        self.in_flight += rec.bytes as u64;
        self.records.push_back(rec);
        rec
    }

    fn mark_lost(&mut self, rec: &mut TxRecord) {
        rec.lost = true;
        self.in_flight -= rec.bytes as u64;
        if !self.is_acked(rec.seq) {
            self.retx.push_back(rec.seq);
            self.cumulative_retransmits += 1;
        }
    }

    /// Whether a newly lost transmission starts a fresh loss episode.
    fn opens_episode(&mut self, tx_id: u64) -> bool {
        if self.recovery_point.is_some_and(|p| tx_id <= p) {
            return false;
        }
        self.recovery_point = Some(self.next_tx.saturating_sub(1));
        true
    }

    pub(crate) fn on_ack(&mut self, tx_id: u64, now: f64) -> Option<AckOutcome> {
        let idx = self
            .records
            .binary_search_by_key(&tx_id, |r| r.tx_id)
            .ok()?;
        let rec = self.records.remove(idx)?;

        // Earlier transmissions still unacked are holes.
        let mut loss_detected = false;
        let mut holes = idx;
        let mut j = 0;
        while j < holes {
            let mut hole = self.records[j];
            if !hole.lost {
                hole.acked_after += 1;
                if hole.acked_after < DUP_THRESH {
                    self.records[j] = hole;
                    j += 1;
                    continue;
                }
                self.mark_lost(&mut hole);
                loss_detected |= self.opens_episode(hole.tx_id);
            }
            self.records.remove(j);
            holes -= 1;
        }

        if !rec.lost {
            self.in_flight -= rec.bytes as u64;
        }
        let mut new_bytes = 0;
        let s = rec.seq as usize;
        if self.acked.len() <= s {
            self.acked.resize(s + 1, false);
        }
        if !self.acked[s] {
            self.acked[s] = true;
            self.acked_pkts += 1;
            new_bytes = rec.bytes as u64;
            self.delivered += new_bytes;
            self.delivered_time = now;
        }

        let rtt = (now - rec.sent_at).max(f64::MIN_POSITIVE);
        // A burst of acks landing just after a send would otherwise be
        // credited to this packet's round trip alone.
        let interval = rtt.max(now - rec.delivered_time_at_send);
        let delivery_rate = (self.delivered - rec.delivered_at_send) as f64 / interval;
        let round_end = rec.delivered_at_send >= self.next_round_delivered;
        if round_end {
            self.next_round_delivered = self.delivered;
        }
        self.update_rto(rtt);
        Some(AckOutcome {
            rtt,
            new_bytes,
            delivery_rate,
            loss_detected,
            round_end,
            completed: self.total_pkts == Some(self.acked_pkts),
        })
    }

    fn update_rto(&mut self, rtt: f64) {
        match self.srtt {
            None => {
                self.srtt = Some(rtt);
                self.rttvar = rtt / 2.0;
            }
            Some(s) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (s - rtt).abs();
                self.srtt = Some(0.875 * s + 0.125 * rtt);
            }
        }
        self.backoff = 1.0;
    }

    pub(crate) fn rto(&self) -> f64 {
        let base = match self.srtt {
            None => INITIAL_RTO,
            Some(s) => (s + 4.0 * self.rttvar).max(MIN_RTO),
        };
        (base * self.backoff).min(MAX_RTO)
    }

    /// Whether anything sent is still believed to be in the network.
    pub(crate) fn has_outstanding(&self) -> bool {
        self.in_flight > 0
    }

    /// Timer expiry: every outstanding transmission is presumed lost.
    pub(crate) fn on_rto(&mut self) {
        let mut recs = std::mem::take(&mut self.records);
        for rec in recs.iter_mut().filter(|r| !r.lost) {
            self.mark_lost(rec);
        }
        self.records = recs;
        self.recovery_point = Some(self.next_tx.saturating_sub(1));
        self.backoff = (self.backoff * 2.0).min(64.0);
        self.rto_count += 1;
    }

    pub(crate) fn acked_bytes_total(&self) -> u64 {
        self.delivered
    }

    pub(crate) fn is_complete(&self) -> bool {
        self.total_pkts == Some(self.acked_pkts)
    }
}
