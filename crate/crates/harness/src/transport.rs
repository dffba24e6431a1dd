use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use vnc_core::{RTime, VncMessage};

#[derive(Debug, Clone, PartialEq)]
pub enum DelayModel {
    Constant(f64),
    PerKind {
        table: BTreeMap<String, f64>,
        default: f64,
    },
}

impl DelayModel {
    pub fn delay(&self, kind: &str) -> f64 {
        match self {
            DelayModel::Constant(d) => *d,
            DelayModel::PerKind { table, default } => table.get(kind).copied().unwrap_or(*default),
        }
    }
}

/// Drops every message of `kind` sent in `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropWindow {
    pub kind: String,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportConfig {
    pub delay: DelayModel,
    pub drop_prob: BTreeMap<String, f64>,
    pub drop_windows: Vec<DropWindow>,
    pub dup_prob: f64,
    /// Extra delay drawn uniformly from `[0, reorder_window)`.
    pub reorder_window: f64,
    pub seed: u64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            delay: DelayModel::Constant(0.0),
            drop_prob: BTreeMap::new(),
            drop_windows: Vec::new(),
            dup_prob: 0.0,
            reorder_window: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TransportCounters {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub duplicated: u64,
}

impl TransportCounters {
    pub fn in_flight(&self) -> u64 {
        self.sent + self.duplicated - self.delivered - self.dropped
    }
}

/// Decides when, whether and how often a message arrives.
pub struct Transport {
    pub cfg: TransportConfig,
    pub counters: TransportCounters,
    rng: ChaCha8Rng,
}

impl Transport {
    pub fn new(cfg: TransportConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Transport {
            cfg,
            counters: TransportCounters::default(),
            rng,
        }
    }

    fn dropped(&mut self, kind: &str, now: RTime) -> bool {
        let in_window = self
            .cfg
            .drop_windows
            .iter()
            .any(|w| w.kind == kind && now >= w.start && now < w.end);
        if in_window {
            return true;
        }
        match self.cfg.drop_prob.get(kind) {
            Some(&p) if p > 0.0 => self.rng.random::<f64>() < p,
            _ => false,
        }
    }

    fn arrival(&mut self, kind: &str, now: RTime) -> f64 {
        let mut t = now + self.cfg.delay.delay(kind);
        if self.cfg.reorder_window > 0.0 {
            t += self.rng.random::<f64>() * self.cfg.reorder_window;
        }
        t
    }

    /// Schedules `msg`; returns zero, one or two `(arrival, message)` pairs.
    pub fn deliver<P: Clone>(&mut self, msg: VncMessage<P>, now: RTime) -> Vec<(f64, VncMessage<P>)> {
        self.counters.sent += 1;
        if self.dropped(msg.kind, now) {
            self.counters.dropped += 1;
            return Vec::new();
        }
        let mut out = Vec::with_capacity(1);
        if self.cfg.dup_prob > 0.0 && self.rng.random::<f64>() < self.cfg.dup_prob {
            self.counters.duplicated += 1;
            let t = self.arrival(msg.kind, now);
            out.push((t, msg.clone()));
        }
        let t = self.arrival(msg.kind, now);
        out.push((t, msg));
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    pub fn mark_delivered(&mut self) {
        self.counters.delivered += 1;
    }
}
