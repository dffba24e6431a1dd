//! Condition/Event and Place/Transition nets.
//!
//! Markings are integer token counts. Synchronic distance is computed by
//! exhaustive reachability search over the net augmented with a virtual
//! counter place.

mod net;
mod synchronic;
mod tolerance;

pub use net::{fsm_to_ce, parse_net, Fsm, NetFile, PetriNet};
pub use synchronic::{gsv, normalized_sigma, p_oo, ratio_h_sigma_n, synchronic_distance, x_rate_bound, Synchronic};
pub use tolerance::{propagate_tolerance, ToleranceVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PetriError {
    #[error("transition {0} is not enabled")]
    NotEnabled(String),
    #[error("no transition named {0}")]
    UnknownTransition(String),
    #[error("no place named {0}")]
    UnknownPlace(String),
    #[error("malformed net: {0}")]
    Malformed(String),
    #[error("transition sets must be non-empty and disjoint")]
    BadSets,
    #[error("value out of range: {0}")]
    Range(&'static str),
}
