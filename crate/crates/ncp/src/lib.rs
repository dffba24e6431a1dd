//! The RDRN network control protocol as a VNC scenario.
//!
//! Edge switches (ES) elect a master and exchange positions over a simulated
//! orderwire; remote nodes (RN) report positions and are handed off between
//! switches. Each ES runs a beam-table task whose result can be precomputed
//! from predicted positions and read from cache when the real fix arrives.

mod fsm;
mod packet;
mod scenario;

pub use fsm::{
    elect_master, es_step, may_emit, rn_step, Dest, Event, FsmState, NodeState, Role, Step,
    SwitchEntry, Timer,
};
pub use packet::{
    timetab_delay, NcpPacket, HANDOFF, MYCALL, NEWSWITCH, SWITCHPOS, TIMETAB, TOPOLOGY, USER_POS,
};
pub use scenario::{decide, run_ncp, EsView, NcpParams, RnEntry};

use vnc_harness::Registry;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NcpError {
    #[error("election over an empty set")]
    EmptyElection,
    #[error("{what} is not valid for node {node}")]
    WrongRole { node: String, what: String },
}

/// Adds the `ncp` scenario to `reg`.
pub fn register(reg: &mut Registry) {
    reg.register("ncp", run_ncp);
}
