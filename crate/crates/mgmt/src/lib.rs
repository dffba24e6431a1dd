//! Predictive management of a small switch network.
//!
//! Each switch is modelled by an LP that predicts its cumulative arrival
//! counter ahead of real time. A twin of the real network runs in the same
//! loop and is polled every Υ; a prediction more than Θ away from the polled
//! value is corrected by rolling the LP back to exactly the query time.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use vnc_core::{CoreError, LogicalProcess, RollbackCause, RollbackDirective, VTime};
use vnc_harness::Registry;

mod sim;

pub use sim::{run_mgmt, run_triple, simulate, MgmtParams};

pub const PKT: &str = "PKT";
pub const SAMPLE: &str = "SAMPLE";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MgmtMsg {
    Packet,
    /// Clock tick that makes an idle switch save its state.
    Sample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchState {
    /// Cumulative arrivals.
    pub counter: u64,
    pub busy_until: f64,
    pub service: ChaCha8Rng,
    pub routing: ChaCha8Rng,
    pub noise: ChaCha8Rng,
}

pub type SwitchLp = LogicalProcess<MgmtMsg, SwitchState>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgmtTriple {
    pub big_lambda: f64,
    pub theta: f64,
    pub upsilon: f64,
}

impl MgmtTriple {
    pub fn new(big_lambda: f64, theta: f64, upsilon: f64) -> Option<Self> {
        if big_lambda > 0.0 && theta > 0.0 && upsilon > 0.0 {
            Some(MgmtTriple {
                big_lambda,
                theta,
                upsilon,
            })
        } else {
            None
        }
    }
}

pub const STANDARD_TRIPLES: [MgmtTriple; 4] = [
    MgmtTriple { big_lambda: 5.0, theta: 10.0, upsilon: 5.0 },
    MgmtTriple { big_lambda: 5.0, theta: 10.0, upsilon: 1.0 },
    MgmtTriple { big_lambda: 5.0, theta: 3.0, upsilon: 5.0 },
    MgmtTriple { big_lambda: 400.0, theta: 5.0, upsilon: 5.0 },
];

/// Sequential exponential stages making up one packet's service.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceModel {
    pub servers: u32,
    /// Mean of the whole service, all stages together.
    pub mean: f64,
}

impl ServiceModel {
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let stage = Exp::new(self.servers as f64 / self.mean).expect("positive rate");
        (0..self.servers).map(|_| stage.sample(rng)).sum()
    }
}

/// Admits one packet arriving at `arrival`: bumps the counter, queues it
/// behind the busy period and picks the next switch (0-based, self
/// included). `noise` scales the service time by a mean-one lognormal
/// factor drawn from the state's own noise stream.
pub fn admit(
    state: &mut SwitchState,
    arrival: f64,
    svc: &ServiceModel,
    noise: f64,
    switches: u32,
) -> (f64, u32) {
    state.counter += 1;
    let mut service = svc.draw(&mut state.service);
    if noise > 0.0 {
        let z: f64 = StandardNormal.sample(&mut state.noise);
        service *= (noise * z - noise * noise / 2.0).exp();
    }
    let end = arrival.max(state.busy_until) + service;
    state.busy_until = end;
    let dst = state.routing.random_range(0..switches);
    (end, dst)
}

/// Counter of the newest saved state at or before `t`.
pub fn predicted_at(lp: &SwitchLp, t: VTime) -> Option<u64> {
    let sq = lp.state_queue();
    let idx = sq.partition_point(|s| s.save_time <= t);
    if idx == 0 {
        None
    } else {
        Some(sq[idx - 1].state.counter)
    }
}

/// Compares the prediction at `t_v` with the polled counter `s_v` and, when
/// they differ by more than `theta`, rolls back to exactly `t_v` with the
/// counter replaced by `s_v`.
pub fn verification_query(
    lp: &mut SwitchLp,
    t_v: VTime,
    s_v: u64,
    theta: f64,
) -> Result<Option<RollbackDirective<MgmtMsg, SwitchState>>, CoreError> {
    if t_v > lp.lvt {
        return Err(CoreError::FutureVerification { t_v, lvt: lp.lvt });
    }
    let sq = lp.state_queue();
    let idx = sq.partition_point(|s| s.save_time <= t_v);
    if idx == 0 {
        return Err(CoreError::BeforeHorizon {
            target: t_v,
            earliest: sq[0].save_time,
        });
    }
    let snap = &sq[idx - 1];
    if (snap.state.counter as f64 - s_v as f64).abs() <= theta {
        return Ok(None);
    }
    let mut fixed = snap.state.clone();
    fixed.counter = s_v;
    lp.rollback_exact(t_v, fixed, RollbackCause::VerificationQuery).map(Some)
}

pub fn register(reg: &mut Registry) {
    reg.register("mgmt", run_mgmt);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use vnc_core::{init_lp, VncMessage};

    fn state(seed: u64) -> SwitchState {
        SwitchState {
            counter: 0,
            busy_until: 0.0,
            service: ChaCha8Rng::seed_from_u64(seed),
            routing: ChaCha8Rng::seed_from_u64(seed + 1),
            noise: ChaCha8Rng::seed_from_u64(seed + 2),
        }
    }

    fn lp_with_history() -> SwitchLp {
        let mut lp: SwitchLp = init_lp(1, 3.0, 5.0, state(0)).unwrap();
        let zero = |_: &SwitchState, _: &MgmtMsg| 0.0;
        for (i, t) in [1.0, 2.0, 3.0, 4.0].into_iter().enumerate() {
            let m = VncMessage::new(t, t, t, 9, 1, SAMPLE, MgmtMsg::Sample);
            let mut m = m;
            m.seq = i as u64;
            lp.enqueue_received(m, 0.0, &zero).unwrap();
        }
        while lp.next_processable(0.0).is_some() {
            let mut s = lp.current_state.clone();
            s.counter += 2;
            lp.save_state(s);
        }
        lp
    }

    #[test]
    fn triple_must_be_positive() {
        assert!(MgmtTriple::new(5.0, 10.0, 5.0).is_some());
        assert!(MgmtTriple::new(0.0, 10.0, 5.0).is_none());
        assert!(MgmtTriple::new(5.0, -1.0, 5.0).is_none());
        for t in STANDARD_TRIPLES {
            assert_eq!(MgmtTriple::new(t.big_lambda, t.theta, t.upsilon), Some(t));
        }
    }

    #[test]
    fn service_mean_is_total() {
        let svc = ServiceModel { servers: 10, mean: 10.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 20_000;
        let m: f64 = (0..n).map(|_| svc.draw(&mut rng)).sum::<f64>() / n as f64;
        assert!((m - 10.0).abs() < 0.1, "{m}");
    }

    #[test]
    fn admit_queues_behind_busy_period() {
        let svc = ServiceModel { servers: 10, mean: 10.0 };
        let mut s = state(7);
        let (e1, d1) = admit(&mut s, 0.0, &svc, 0.0, 3);
        let (e2, _) = admit(&mut s, 0.5, &svc, 0.0, 3);
        assert!(e1 > 0.0 && e2 > e1);
        assert!(d1 < 3);
        assert_eq!(s.counter, 2);
        assert_eq!(s.busy_until, e2);
    }

    #[test]
    fn zero_noise_matches_twin() {
        let svc = ServiceModel { servers: 10, mean: 10.0 };
        let mut a = state(11);
        let mut b = state(11);
        for t in 0..20 {
            assert_eq!(admit(&mut a, t as f64, &svc, 0.0, 3), admit(&mut b, t as f64, &svc, 0.0, 3));
        }
    }

    #[test]
    fn matching_prediction_keeps_history() {
        let mut lp = lp_with_history();
        assert_eq!(predicted_at(&lp, 3.0), Some(6));
        assert_eq!(predicted_at(&lp, 2.5), Some(4));
        assert!(verification_query(&mut lp, 3.0, 6, 3.0).unwrap().is_none());
        assert!(verification_query(&mut lp, 3.0, 9, 3.0).unwrap().is_none());
        assert_eq!(lp.lvt, 4.0);
        assert_eq!(lp.counters.rollbacks_verification, 0);
    }

    #[test]
    fn rollback_lands_exactly_on_query_time() {
        let mut lp = lp_with_history();
        let d = verification_query(&mut lp, 2.5, 0, 3.0).unwrap().unwrap();
        assert_eq!(d.target_time, 2.5);
        assert_eq!(d.cause, RollbackCause::VerificationQuery);
        assert_eq!(d.restored_snapshot.state.counter, 0);
        assert_eq!(lp.lvt, 2.5);
        assert_eq!(lp.current_state.counter, 0);
        assert_eq!(lp.state_queue().last().unwrap().save_time, 2.5);
        assert_eq!(lp.counters.rollbacks_verification, 1);
        // samples at 3 and 4 are back in the queue
        assert_eq!(lp.receive_queue().len(), 2);
    }

    #[test]
    fn query_beyond_lvt_is_rejected() {
        let mut lp = lp_with_history();
        assert!(matches!(
            verification_query(&mut lp, 4.5, 0, 3.0),
            Err(CoreError::FutureVerification { .. })
        ));
    }
}
