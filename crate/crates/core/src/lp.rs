use serde::Serialize;

use crate::message::{LpId, RTime, VTime, VncMessage};
use crate::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Vnc,
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Cancellation {
    Aggressive,
    Lazy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RollbackCause {
    Causal,
    OutOfTolerance,
    VerificationQuery,
}

impl RollbackCause {
    pub fn as_str(self) -> &'static str {
        match self {
            RollbackCause::Causal => "causal",
            RollbackCause::OutOfTolerance => "out_of_tolerance",
            RollbackCause::VerificationQuery => "verification_query",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<S> {
    pub save_time: VTime,
    pub state: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollbackDirective<P, S> {
    pub target_time: VTime,
    pub cause: RollbackCause,
    pub restored_snapshot: Snapshot<S>,
    pub anti_messages: Vec<VncMessage<P>>,
}

/// Result of handing a message to [`LogicalProcess::enqueue_received`].
#[derive(Debug, Clone, PartialEq)]
pub enum Received<P, S> {
    /// Inserted into the receive queue (or parked as a pending anti-message).
    Accepted,
    /// The message and its counterpart cancelled each other.
    Annihilated,
    /// The anti-message refers to a message that has already been committed.
    Stale,
    Rollback(RollbackDirective<P, S>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advance {
    Held,
    Running,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tolerance {
    Within,
    Exceeded(f64),
}

/// Outcome of [`LogicalProcess::send_virtual`].
#[derive(Debug, Clone, PartialEq)]
pub enum Send<P> {
    /// Hand this message to the transport.
    Transmit(VncMessage<P>),
    /// Nothing leaves the LP: coast-forward silence or a lazy-cancellation match.
    Suppressed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LpCounters {
    pub real_in: u64,
    pub virtual_in: u64,
    pub anti_in: u64,
    pub rollbacks_causal: u64,
    pub rollbacks_tolerance: u64,
    pub rollbacks_verification: u64,
    pub tolerance_checks: u64,
    pub annihilations: u64,
    pub stale_antis: u64,
    pub anti_out: u64,
    pub virtual_out: u64,
    pub suppressed_sends: u64,
    pub commits: u64,
    pub held_steps: u64,
    pub max_lead: f64,
}

/// `|saved - actual| > theta` decides a rollback; equality is within tolerance.
pub fn tolerance_check<S, P>(
    saved: &S,
    actual: &P,
    theta: f64,
    metric: &dyn Fn(&S, &P) -> f64,
) -> Tolerance {
    let d = metric(saved, actual);
    if d > theta {
        Tolerance::Exceeded(d)
    } else {
        Tolerance::Within
    }
}

/// A logical process wrapping an opaque physical-process state `S` that
/// consumes payloads of type `P`.
#[derive(Debug, Clone)]
pub struct LogicalProcess<P, S> {
    pub id: LpId,
    pub lvt: VTime,
    pub theta: f64,
    pub lambda: f64,
    pub mode: Mode,
    pub cancellation: Cancellation,
    pub current_state: S,
    pub counters: LpCounters,
    qr: Vec<VncMessage<P>>,
    qs: Vec<VncMessage<P>>,
    sq: Vec<Snapshot<S>>,
    processed: Vec<VncMessage<P>>,
    pending_anti: Vec<VncMessage<P>>,
    lazy_pending: Vec<VncMessage<P>>,
    released: Vec<VncMessage<P>>,
    coast_until: Option<VTime>,
    /// Messages processed before the last causal rollback that re-execution
    /// has not reached yet, keyed by `(src, seq)`.
    replay: Vec<(LpId, u64)>,
    replaying: bool,
    committed_through: Option<VTime>,
    horizon: VTime,
    next_seq: u64,
}

/// Creates an LP at LVT 0 with the initial state saved at time 0.
pub fn init_lp<P, S: Clone>(
    id: LpId,
    theta: f64,
    lambda: f64,
    initial_state: S,
) -> Result<LogicalProcess<P, S>, CoreError> {
    if !(lambda > 0.0) {
        return Err(CoreError::InvalidLookahead(lambda));
    }
    if !(theta >= 0.0) {
        return Err(CoreError::InvalidTolerance(theta));
    }
    Ok(LogicalProcess {
        id,
        lvt: 0.0,
        theta,
        lambda,
        mode: Mode::Vnc,
        cancellation: Cancellation::Aggressive,
        current_state: initial_state.clone(),
        counters: LpCounters::default(),
        qr: Vec::new(),
        qs: Vec::new(),
        sq: vec![Snapshot {
            save_time: 0.0,
            state: initial_state,
        }],
        processed: Vec::new(),
        pending_anti: Vec::new(),
        lazy_pending: Vec::new(),
        released: Vec::new(),
        coast_until: None,
        replay: Vec::new(),
        replaying: false,
        committed_through: None,
        horizon: 0.0,
        next_seq: 0,
    })
}

fn insert_by_recv<P>(q: &mut Vec<VncMessage<P>>, msg: VncMessage<P>) {
    let pos = q.partition_point(|m| m.recv_order(&msg).is_le());
    q.insert(pos, msg);
}

impl<P: Clone + PartialEq, S: Clone> LogicalProcess<P, S> {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_cancellation(mut self, c: Cancellation) -> Self {
        self.cancellation = c;
        self
    }

    pub fn receive_queue(&self) -> &[VncMessage<P>] {
        &self.qr
    }

    pub fn send_queue(&self) -> &[VncMessage<P>] {
        &self.qs
    }

    pub fn state_queue(&self) -> &[Snapshot<S>] {
        &self.sq
    }

    pub fn pending_antis(&self) -> usize {
        self.pending_anti.len()
    }

    /// Real time below which nothing can be rolled back.
    pub fn purge_horizon(&self) -> VTime {
        self.horizon
    }

    /// True while re-executing, before the straggler's TR, a message that
    /// had already been processed before the rollback.
    pub fn coasting(&self) -> bool {
        self.replaying && self.coast_until.is_some_and(|c| self.lvt < c)
    }

    /// Accepts an arriving message, annihilating or rolling back as required.
    pub fn enqueue_received(
        &mut self,
        msg: VncMessage<P>,
        now: RTime,
        tolerance_cmp: &dyn Fn(&S, &P) -> f64,
    ) -> Result<Received<P, S>, CoreError> {
        if msg.dst != self.id {
            return Err(CoreError::WrongDestination {
                lp: self.id,
                dst: msg.dst,
            });
        }
        if msg.anti {
            self.counters.anti_in += 1;
            return self.receive_anti(msg);
        }
        if let Some(i) = self.pending_anti.iter().position(|a| a.same_identity(&msg)) {
            self.pending_anti.remove(i);
            self.counters.annihilations += 1;
            if msg.is_virtual(now) {
                self.counters.virtual_in += 1;
            } else {
                self.counters.real_in += 1;
            }
            return Ok(Received::Annihilated);
        }
        if msg.is_virtual(now) {
            self.counters.virtual_in += 1;
            if msg.recv_time < self.lvt {
                let tr = msg.recv_time;
                let d = self.rollback_before(tr, RollbackCause::Causal);
                insert_by_recv(&mut self.qr, msg);
                return Ok(Received::Rollback(d));
            }
            insert_by_recv(&mut self.qr, msg);
            return Ok(Received::Accepted);
        }
        self.counters.real_in += 1;
        let tr = msg.recv_time;
        if self.lvt >= tr {
            let verdict = self
                .closest_snapshot(tr)
                .map(|snap| tolerance_check(&snap.state, &msg.payload, self.theta, tolerance_cmp));
            if let Some(verdict) = verdict {
                self.counters.tolerance_checks += 1;
                if let Tolerance::Exceeded(_) = verdict {
                    let d = self.rollback_before(tr, RollbackCause::OutOfTolerance);
                    insert_by_recv(&mut self.qr, msg);
                    return Ok(Received::Rollback(d));
                }
            }
        }
        insert_by_recv(&mut self.qr, msg);
        Ok(Received::Accepted)
    }

    fn receive_anti(&mut self, anti: VncMessage<P>) -> Result<Received<P, S>, CoreError> {
        if let Some(i) = self.qr.iter().position(|m| m.same_identity(&anti)) {
            self.qr.remove(i);
            self.counters.annihilations += 1;
            return Ok(Received::Annihilated);
        }
        if self.processed.iter().any(|m| m.same_identity(&anti)) {
            let d = self.rollback_before(anti.recv_time, RollbackCause::Causal);
            // the original is back in qr after the rollback
            if let Some(i) = self.qr.iter().position(|m| m.same_identity(&anti)) {
                self.qr.remove(i);
            }
            self.counters.annihilations += 1;
            return Ok(Received::Rollback(d));
        }
        if anti.recv_time <= self.horizon {
            self.counters.stale_antis += 1;
            return Ok(Received::Stale);
        }
        if self.pending_anti.iter().any(|m| m.same_identity(&anti)) {
            return Err(CoreError::AntiWithoutProvenance {
                lp: self.id,
                src: anti.src,
                seq: anti.seq,
            });
        }
        self.pending_anti.push(anti);
        Ok(Received::Accepted)
    }

    /// Saved snapshot whose time is nearest `t`; ties go to the earlier save.
    pub fn closest_snapshot(&self, t: VTime) -> Option<&Snapshot<S>> {
        let mut best: Option<&Snapshot<S>> = None;
        for s in &self.sq {
            let better = match best {
                None => true,
                Some(b) => (s.save_time - t).abs() < (b.save_time - t).abs(),
            };
            if better {
                best = Some(s);
            }
        }
        best
    }

    fn rollback_before(&mut self, tr: VTime, cause: RollbackCause) -> RollbackDirective<P, S> {
        let idx = self.sq.partition_point(|s| s.save_time < tr);
        let target = if idx == 0 {
            self.sq[0].save_time
        } else {
            self.sq[idx - 1].save_time
        };
        let replay: Vec<_> = self
            .processed
            .iter()
            .filter(|m| m.recv_time > target && m.recv_time < tr)
            .map(|m| (m.src, m.seq))
            .collect();
        let restored = self
            .restore_state(target)
            .expect("target taken from the state queue");
        let anti_messages = self.drain_rollback(target);
        if self.cancellation == Cancellation::Aggressive {
            self.coast_until = Some(tr);
            self.replay = replay;
        }
        self.count_rollback(cause);
        RollbackDirective {
            target_time: target,
            cause,
            restored_snapshot: restored,
            anti_messages,
        }
    }

    fn count_rollback(&mut self, cause: RollbackCause) {
        match cause {
            RollbackCause::Causal => self.counters.rollbacks_causal += 1,
            RollbackCause::OutOfTolerance => self.counters.rollbacks_tolerance += 1,
            RollbackCause::VerificationQuery => self.counters.rollbacks_verification += 1,
        }
    }

    /// Rolls back to exactly `t_v`, installing `state` as the snapshot there.
    pub fn rollback_exact(
        &mut self,
        t_v: VTime,
        state: S,
        cause: RollbackCause,
    ) -> Result<RollbackDirective<P, S>, CoreError> {
        if t_v > self.lvt {
            return Err(CoreError::FutureVerification {
                t_v,
                lvt: self.lvt,
            });
        }
        if t_v < self.sq[0].save_time {
            return Err(CoreError::BeforeHorizon {
                target: t_v,
                earliest: self.sq[0].save_time,
            });
        }
        let keep = self.sq.partition_point(|s| s.save_time < t_v);
        self.sq.truncate(keep);
        let snap = Snapshot {
            save_time: t_v,
            state: state.clone(),
        };
        self.sq.push(snap.clone());
        self.lvt = t_v;
        self.current_state = state;
        self.requeue_after(t_v);
        let anti_messages = self.drain_rollback(t_v);
        self.coast_until = None;
        self.replay.clear();
        self.count_rollback(cause);
        Ok(RollbackDirective {
            target_time: t_v,
            cause,
            restored_snapshot: snap,
            anti_messages,
        })
    }

    fn requeue_after(&mut self, t: VTime) {
        let keep = self.processed.partition_point(|m| m.recv_time <= t);
        let back: Vec<_> = self.processed.drain(keep..).collect();
        for m in back {
            insert_by_recv(&mut self.qr, m);
        }
    }

    /// Removes and returns the receive-queue head, advancing LVT.
    pub fn next_message(&mut self) -> Option<VncMessage<P>> {
        if self.qr.is_empty() {
            return None;
        }
        let msg = self.qr.remove(0);
        if msg.recv_time > self.lvt {
            self.lvt = msg.recv_time;
        }
        if self.coast_until.is_some_and(|c| self.lvt >= c) {
            self.coast_until = None;
            self.replay.clear();
        }
        self.replaying = match self.replay.iter().position(|&(src, seq)| src == msg.src && seq == msg.seq) {
            Some(i) => {
                self.replay.swap_remove(i);
                true
            }
            None => false,
        };
        self.release_lazy();
        let pos = self.processed.partition_point(|m| m.recv_order(&msg).is_le());
        self.processed.insert(pos, msg.clone());
        Some(msg)
    }

    /// Like [`next_message`](Self::next_message) but honours the lookahead
    /// window: a virtual head beyond `now + lambda` stays queued.
    pub fn next_processable(&mut self, now: RTime) -> Option<VncMessage<P>> {
        let head = self.qr.first()?;
        if self.mode == Mode::Vnc && head.is_virtual(now) && head.recv_time > now + self.lambda {
            return None;
        }
        self.next_message()
    }

    pub fn peek(&self) -> Option<&VncMessage<P>> {
        self.qr.first()
    }

    /// Records an outgoing virtual message in the send queue.
    pub fn send_virtual(&mut self, mut msg: VncMessage<P>) -> Result<Send<P>, CoreError> {
        if msg.send_time < self.lvt {
            return Err(CoreError::SendInPast {
                send_time: msg.send_time,
                lvt: self.lvt,
            });
        }
        if msg.recv_time < msg.send_time {
            return Err(CoreError::ReceiveBeforeSend {
                send_time: msg.send_time,
                recv_time: msg.recv_time,
            });
        }
        msg.src = self.id;
        msg.anti = false;
        if self.cancellation == Cancellation::Aggressive && self.coasting() {
            self.counters.suppressed_sends += 1;
            return Ok(Send::Suppressed);
        }
        if self.cancellation == Cancellation::Lazy {
            if let Some(i) = self.lazy_pending.iter().position(|o| {
                o.dst == msg.dst
                    && o.kind == msg.kind
                    && o.send_time == msg.send_time
                    && o.recv_time == msg.recv_time
                    && o.payload == msg.payload
            }) {
                let orig = self.lazy_pending.remove(i);
                let pos = self.qs.partition_point(|m| m.send_time <= orig.send_time);
                self.qs.insert(pos, orig);
                self.counters.suppressed_sends += 1;
                return Ok(Send::Suppressed);
            }
        }
        msg.seq = self.next_seq;
        self.next_seq += 1;
        let pos = self.qs.partition_point(|m| m.send_time <= msg.send_time);
        self.qs.insert(pos, msg.clone());
        self.counters.virtual_out += 1;
        Ok(Send::Transmit(msg))
    }

    /// Stamps a real message with this LP's identity without recording it in
    /// the send queue; real messages are never cancelled.
    pub fn send_real(&mut self, mut msg: VncMessage<P>) -> VncMessage<P> {
        msg.src = self.id;
        msg.anti = false;
        msg.seq = self.next_seq;
        self.next_seq += 1;
        msg
    }

    /// Saves `state` at the current LVT; a second save at the same LVT replaces the first.
    pub fn save_state(&mut self, state: S) {
        self.current_state = state.clone();
        let snap = Snapshot {
            save_time: self.lvt,
            state,
        };
        match self.sq.last() {
            Some(last) if last.save_time == self.lvt => {
                *self.sq.last_mut().unwrap() = snap;
            }
            Some(last) if last.save_time > self.lvt => {
                let pos = self.sq.partition_point(|s| s.save_time < self.lvt);
                if self.sq[pos].save_time == self.lvt {
                    self.sq[pos] = snap;
                } else {
                    self.sq.insert(pos, snap);
                }
            }
            _ => self.sq.push(snap),
        }
    }

    /// Restores the latest snapshot at or before `target` and discards later ones.
    pub fn restore_state(&mut self, target: VTime) -> Result<Snapshot<S>, CoreError> {
        let idx = self.sq.partition_point(|s| s.save_time <= target);
        if idx == 0 {
            return Err(CoreError::BeforeHorizon {
                target,
                earliest: self.sq.first().map_or(f64::NAN, |s| s.save_time),
            });
        }
        self.sq.truncate(idx);
        let snap = self.sq[idx - 1].clone();
        self.lvt = snap.save_time;
        self.current_state = snap.state.clone();
        self.requeue_after(snap.save_time);
        Ok(snap)
    }

    /// Anti-messages for every send after `target`. In lazy mode they are
    /// held back until re-execution shows whether the send recurs.
    pub fn drain_rollback(&mut self, target: VTime) -> Vec<VncMessage<P>> {
        let keep = self.qs.partition_point(|m| m.send_time <= target);
        let undone: Vec<_> = self.qs.drain(keep..).collect();
        match self.cancellation {
            Cancellation::Aggressive => {
                self.counters.anti_out += undone.len() as u64;
                undone.iter().map(|m| m.anti_copy()).collect()
            }
            Cancellation::Lazy => {
                self.lazy_pending.extend(undone);
                self.lazy_pending
                    .sort_by(|a, b| a.send_time.total_cmp(&b.send_time));
                Vec::new()
            }
        }
    }

    fn release_lazy(&mut self) {
        let lvt = self.lvt;
        let mut i = 0;
        while i < self.lazy_pending.len() {
            if self.lazy_pending[i].send_time < lvt {
                let m = self.lazy_pending.remove(i);
                self.counters.anti_out += 1;
                self.released.push(m.anti_copy());
            } else {
                i += 1;
            }
        }
    }

    /// Anti-messages released by lazy cancellation since the last call.
    pub fn take_released_antis(&mut self) -> Vec<VncMessage<P>> {
        std::mem::take(&mut self.released)
    }

    /// Lazy anti-messages still awaiting a decision; flushed at end of run.
    pub fn flush_lazy(&mut self) -> Vec<VncMessage<P>> {
        let pending = std::mem::take(&mut self.lazy_pending);
        self.counters.anti_out += pending.len() as u64;
        let mut out = self.take_released_antis();
        out.extend(pending.iter().map(|m| m.anti_copy()));
        out
    }

    /// Applies the lookahead throttle, commits saved states reached by real
    /// time and purges history that can no longer be rolled back.
    pub fn advance(&mut self, now: RTime, commit: &mut dyn FnMut(&Snapshot<S>)) -> Advance {
        let lead = self.lvt - now;
        if lead > self.counters.max_lead {
            self.counters.max_lead = lead;
        }
        for s in &self.sq {
            if s.save_time > now {
                break;
            }
            if self.committed_through.is_none_or(|c| s.save_time > c) {
                commit(s);
                self.counters.commits += 1;
                self.committed_through = Some(s.save_time);
            }
        }
        // keep the newest snapshot at or below `now` as the restore floor
        let floor_idx = self.sq.partition_point(|s| s.save_time <= now);
        if floor_idx > 1 {
            self.sq.drain(..floor_idx - 1);
        }
        let floor = self.sq[0].save_time;
        if floor > self.horizon {
            self.horizon = floor;
        }
        let h = self.horizon;
        let keep = self.qs.partition_point(|m| m.send_time <= h);
        self.qs.drain(..keep);
        let keep = self.processed.partition_point(|m| m.recv_time <= h);
        self.processed.drain(..keep);
        self.pending_anti.retain(|a| a.recv_time > now);
        if self.mode == Mode::Vnc && lead >= self.lambda {
            self.counters.held_steps += 1;
            Advance::Held
        } else {
            Advance::Running
        }
    }
}
