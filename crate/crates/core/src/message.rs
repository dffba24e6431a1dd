use std::cmp::Ordering;

/// Virtual time, in the same units as the simulated real-time clock.
pub type VTime = f64;
/// Simulated real time.
pub type RTime = f64;
/// Logical process identifier.
pub type LpId = u32;

/// A timestamped message exchanged between logical processes.
///
/// `seq` is assigned by the sender and, together with `src`, identifies the
/// original that an anti-message cancels.
#[derive(Debug, Clone, PartialEq)]
pub struct VncMessage<P> {
    pub send_time: VTime,
    pub recv_time: VTime,
    pub anti: bool,
    pub origin_real_time: RTime,
    pub src: LpId,
    pub dst: LpId,
    pub kind: &'static str,
    pub seq: u64,
    pub payload: P,
}

impl<P> VncMessage<P> {
    pub fn new(
        send_time: VTime,
        recv_time: VTime,
        origin_real_time: RTime,
        src: LpId,
        dst: LpId,
        kind: &'static str,
        payload: P,
    ) -> Self {
        VncMessage {
            send_time,
            recv_time,
            anti: false,
            origin_real_time,
            src,
            dst,
            kind,
            seq: 0,
            payload,
        }
    }

    /// A message is virtual while its real-time origin still lies in the future.
    pub fn is_virtual(&self, now: RTime) -> bool {
        self.origin_real_time > now
    }

    pub fn is_real(&self, now: RTime) -> bool {
        !self.is_virtual(now)
    }

    /// True when `other` is the same message modulo the anti toggle.
    pub fn same_identity(&self, other: &VncMessage<P>) -> bool {
        self.src == other.src
            && self.seq == other.seq
            && self.dst == other.dst
            && self.kind == other.kind
            && self.send_time == other.send_time
            && self.recv_time == other.recv_time
    }

    pub fn anti_copy(&self) -> Self
    where
        P: Clone,
    {
        VncMessage {
            anti: true,
            ..self.clone()
        }
    }

    /// Receive-queue order: receive time, then send time, then source, then sequence.
    pub fn recv_order(&self, other: &VncMessage<P>) -> Ordering {
        self.recv_time
            .total_cmp(&other.recv_time)
            .then(self.send_time.total_cmp(&other.send_time))
            .then(self.src.cmp(&other.src))
            .then(self.seq.cmp(&other.seq))
    }
}
