//! Deterministic discrete-event engine for VNC scenarios.
//!
//! Real time is simulated. Scenarios push messages through a seeded
//! [`Transport`], record every transmission in a [`MetricsReport`], and are
//! dispatched by name through a [`Registry`].

mod config;
mod events;
mod metrics;
mod slp;
mod transport;

pub use config::{parse_error_model, ConfigError, ScenarioConfig};
pub use events::EventQueue;
pub use metrics::{measure_beta, measure_speedup, ClassTotals, MessageClass, MetricsReport, Table};
pub use slp::{run_slp_chain, SlpParams};
pub use transport::{DelayModel, DropWindow, Transport, TransportConfig, TransportCounters};

use std::collections::BTreeMap;

use vnc_core::{CoreError, LpId, RTime, VncMessage};
use vnc_driver::DriverError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("unschedulable configuration: {0}")]
    Unschedulable(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("no task completions recorded")]
    EmptyEvents,
    #[error("no real messages recorded")]
    NoRealMessages,
}

/// Transport plus the arrival queue it feeds.
pub struct Net<P> {
    pub transport: Transport,
    arrivals: EventQueue<VncMessage<P>>,
    names: BTreeMap<LpId, String>,
}

impl<P: Clone> Net<P> {
    pub fn new(cfg: TransportConfig) -> Self {
        Net {
            transport: Transport::new(cfg),
            arrivals: EventQueue::new(),
            names: BTreeMap::new(),
        }
    }

    pub fn name(&mut self, id: LpId, name: &str) {
        self.names.insert(id, name.to_string());
    }

    fn label(&self, id: LpId) -> String {
        self.names.get(&id).cloned().unwrap_or_else(|| id.to_string())
    }

    pub fn send(&mut self, msg: VncMessage<P>, now: RTime, report: &mut MetricsReport) {
        let link = format!("{}->{}", self.label(msg.src), self.label(msg.dst));
        report.record_send(&msg, now, &link);
        for (t, m) in self.transport.deliver(msg, now) {
            self.arrivals.push(t, m);
        }
    }

    pub fn next_arrival(&self) -> Option<f64> {
        self.arrivals.peek_time()
    }

    pub fn pop_due(&mut self, now: RTime) -> Option<VncMessage<P>> {
        let (_, m) = self.arrivals.pop_due(now)?;
        self.transport.mark_delivered();
        Some(m)
    }

    pub fn in_flight(&self) -> usize {
        self.arrivals.len()
    }
}

pub type ScenarioFn = fn(&ScenarioConfig) -> Result<MetricsReport, HarnessError>;

/// Name-to-runner table. The harness installs `slp_chain`; front ends add
/// the scenarios that live in other crates.
#[derive(Clone)]
pub struct Registry {
    map: BTreeMap<String, ScenarioFn>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry {
            map: BTreeMap::new(),
        };
        r.register("slp_chain", run_slp_chain);
        r
    }
}

impl Registry {
    pub fn register(&mut self, name: &str, f: ScenarioFn) {
        self.map.insert(name.to_string(), f);
    }

    pub fn names(&self) -> Vec<&str> {
        self.map.keys().map(String::as_str).collect()
    }

    pub fn run(&self, cfg: &ScenarioConfig) -> Result<MetricsReport, HarnessError> {
        cfg.validate()?;
        let name = cfg.scenario()?;
        let f = self
            .map
            .get(name)
            .ok_or_else(|| HarnessError::UnknownScenario(name.to_string()))?;
        f(cfg)
    }
}

/// Runs a built-in scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsReport, HarnessError> {
    Registry::default().run(cfg)
}
