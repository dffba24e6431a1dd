//! Logical-process runtime for optimistic lookahead execution.
//!
//! A [`LogicalProcess`] runs ahead of real time on predicted (virtual) inputs,
//! checks arriving real inputs against the states it saved, and rolls back
//! with anti-messages when a prediction turns out to be out of order or out
//! of tolerance. Real time is supplied by the caller on every call.

mod lp;
mod message;

pub use lp::{
    init_lp, tolerance_check, Advance, Cancellation, LogicalProcess, LpCounters, Mode, Received,
    RollbackCause, RollbackDirective, Send, Snapshot, Tolerance,
};
pub use message::{LpId, RTime, VTime, VncMessage};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("lookahead must be positive, got {0}")]
    InvalidLookahead(f64),
    #[error("tolerance must be non-negative, got {0}")]
    InvalidTolerance(f64),
    #[error("message for lp {dst} delivered to lp {lp}")]
    WrongDestination { lp: LpId, dst: LpId },
    #[error("duplicate anti-message from lp {src} seq {seq} at lp {lp}")]
    AntiWithoutProvenance { lp: LpId, src: LpId, seq: u64 },
    #[error("send time {send_time} is before lvt {lvt}")]
    SendInPast { send_time: VTime, lvt: VTime },
    #[error("receive time {recv_time} is before send time {send_time}")]
    ReceiveBeforeSend { send_time: VTime, recv_time: VTime },
    #[error("restore target {target} precedes earliest retained save {earliest}")]
    BeforeHorizon { target: VTime, earliest: VTime },
    #[error("verification time {t_v} is beyond lvt {lvt}")]
    FutureVerification { t_v: VTime, lvt: VTime },
}
