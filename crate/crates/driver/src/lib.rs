//! Driving processes: the sources of virtual messages.
//!
//! A [`DrivingProcess`] emits predicted positions ahead of the simulated
//! real-time clock, bounded by its lookahead, and emits the true position at
//! every update-period boundary.

mod motion;

pub use motion::{inject_error, predict_position, ErrorModel, GpsFeed, MotionState, Position};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vnc_core::{LpId, Mode, RTime, VTime, VncMessage};

pub const USER_POS: &str = "USER_POS";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DriverError {
    #[error("invalid error model: {0}")]
    InvalidDistribution(&'static str),
    #[error("delta must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("update period must be positive, got {0}")]
    InvalidPeriod(f64),
    #[error("lookahead must be positive, got {0}")]
    InvalidLookahead(f64),
}

#[derive(Debug, Clone)]
pub struct DriverConfig {
    pub id: LpId,
    pub dst: LpId,
    pub update_period: f64,
    pub delta: f64,
    pub lambda: f64,
    pub error_model: ErrorModel,
    pub real_opt: bool,
    pub downstream_min_theta: f64,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            id: 0,
            dst: 1,
            update_period: 2.0,
            delta: 2.0,
            lambda: 300.0,
            error_model: ErrorModel::Normal {
                mean: 0.0,
                variance: 1.0,
            },
            real_opt: false,
            downstream_min_theta: 0.0,
            mode: Mode::Vnc,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct DriverCounters {
    pub virtual_out: u64,
    pub real_out: u64,
    pub real_suppressed: u64,
    pub throttled_steps: u64,
}

#[derive(Debug, Clone)]
pub struct DrivingProcess {
    pub id: LpId,
    pub dst: LpId,
    pub update_period: f64,
    pub delta: f64,
    pub lambda: f64,
    pub lvt: VTime,
    pub predictor: MotionState,
    pub gps: GpsFeed,
    pub error_model: ErrorModel,
    pub real_opt: bool,
    pub downstream_min_theta: f64,
    pub mode: Mode,
    pub counters: DriverCounters,
    rng: ChaCha8Rng,
    next_boundary: u64,
    predictions: Vec<(VTime, Position)>,
}

impl DrivingProcess {
    pub fn new(cfg: DriverConfig, predictor: MotionState, gps: GpsFeed) -> Result<Self, DriverError> {
        if !(cfg.delta > 0.0) {
            return Err(DriverError::InvalidDelta(cfg.delta));
        }
        if !(cfg.update_period > 0.0) {
            return Err(DriverError::InvalidPeriod(cfg.update_period));
        }
        if !(cfg.lambda > 0.0) {
            return Err(DriverError::InvalidLookahead(cfg.lambda));
        }
        cfg.error_model.validate()?;
        Ok(DrivingProcess {
            id: cfg.id,
            dst: cfg.dst,
            update_period: cfg.update_period,
            delta: cfg.delta,
            lambda: cfg.lambda,
            lvt: predictor.t0,
            predictor,
            gps,
            error_model: cfg.error_model,
            real_opt: cfg.real_opt,
            downstream_min_theta: cfg.downstream_min_theta,
            mode: cfg.mode,
            counters: DriverCounters::default(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            next_boundary: 0,
            predictions: Vec::new(),
        })
    }

    /// Replaces the motion model after a real fix.
    pub fn update_fix(&mut self, m: MotionState) {
        self.predictor = m;
    }

    fn prediction_near(&self, t: VTime) -> Option<Position> {
        let i = self.predictions.partition_point(|(tr, _)| *tr < t);
        let mut best: Option<(f64, Position)> = None;
        for j in [i.wrapping_sub(1), i] {
            if let Some(&(tr, p)) = self.predictions.get(j) {
                let d = (tr - t).abs();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, p));
                }
            }
        }
        best.filter(|(d, _)| *d < self.delta).map(|(_, p)| p)
    }
}

/// Advances the driver to real time `now`, returning at most one virtual and
/// at most one real message per call.
pub fn step_driver(d: &mut DrivingProcess, now: RTime) -> Vec<VncMessage<Position>> {
    let mut out = Vec::new();
    if d.mode == Mode::Vnc {
        if d.lvt < now {
            d.lvt = now;
        }
        if d.lvt <= now + d.lambda {
            let tr = d.lvt + d.delta;
            let predicted = predict_position(&d.predictor, tr);
            let payload = inject_error(predicted, &d.error_model, &mut d.rng)
                .expect("model validated at construction");
            let mut m = VncMessage::new(d.lvt, tr, tr, d.id, d.dst, USER_POS, payload);
            m.seq = d.counters.virtual_out;
            out.push(m);
            d.predictions.push((tr, payload));
            d.counters.virtual_out += 1;
            d.lvt = tr;
        } else {
            d.counters.throttled_steps += 1;
        }
    }
    let boundary = d.next_boundary as f64 * d.update_period;
    if now >= boundary {
        let k = ((now / d.update_period).floor() as u64).max(d.next_boundary);
        let t = k as f64 * d.update_period;
        d.next_boundary = k + 1;
        let truth = d.gps.read(t, &mut d.rng);
        let suppress = d.real_opt
            && d
                .prediction_near(t)
                .is_some_and(|p| p.distance(&truth) <= d.downstream_min_theta);
        if suppress {
            d.counters.real_suppressed += 1;
        } else {
            let mut m = VncMessage::new(t, t, t, d.id, d.dst, USER_POS, truth);
            m.seq = u64::MAX - d.counters.real_out;
            out.push(m);
            d.counters.real_out += 1;
        }
        let keep = d.predictions.partition_point(|(tr, _)| *tr < t - d.delta);
        d.predictions.drain(..keep);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn driver(cfg: DriverConfig) -> DrivingProcess {
        let m = MotionState::new(Position::new(0.0, 0.0), 0.1, 0.0, 0.0).unwrap();
        DrivingProcess::new(cfg, m, GpsFeed::exact(m)).unwrap()
    }

    #[test]
    fn throttle_stops_emission() {
        let mut d = driver(DriverConfig {
            lambda: 5.0,
            ..DriverConfig::default()
        });
        for _ in 0..10 {
            step_driver(&mut d, 0.5);
        }
        assert_eq!(d.counters.virtual_out, 3);
        assert!(d.counters.throttled_steps > 0);
        assert!(d.lvt > 0.5 + d.lambda);
    }

    #[test]
    fn real_messages_on_boundaries() {
        let mut d = driver(DriverConfig {
            mode: Mode::Sequential,
            ..DriverConfig::default()
        });
        let mut reals = 0;
        let mut t = 0.25;
        while t < 10.0 {
            reals += step_driver(&mut d, t).len();
            t += 0.25;
        }
        assert_eq!(reals, 5);
        assert_eq!(d.counters.virtual_out, 0);
    }

    #[test]
    fn real_opt_with_exact_prediction() {
        let mut d = driver(DriverConfig {
            error_model: ErrorModel::None,
            real_opt: true,
            downstream_min_theta: 0.5,
            ..DriverConfig::default()
        });
        let mut reals = 0;
        let mut t = 0.0;
        while t < 100.0 {
            let out = step_driver(&mut d, t);
            reals += out.iter().filter(|m| m.is_real(t)).count();
            t += 0.1;
        }
        assert_eq!(reals, 1);
        assert!(d.counters.real_suppressed >= 49);
    }

    #[test]
    fn classification_at_source() {
        let mut d = driver(DriverConfig::default());
        let mut last_tr = f64::NEG_INFINITY;
        let mut t = 0.0;
        while t < 50.0 {
            for m in step_driver(&mut d, t) {
                if m.origin_real_time > t {
                    assert!(m.recv_time > last_tr);
                    last_tr = m.recv_time;
                } else {
                    assert!(m.origin_real_time <= t);
                }
            }
            t += 0.1;
        }
    }

    #[test]
    fn rejects_bad_config() {
        let m = MotionState::new(Position::new(0.0, 0.0), 0.0, 0.0, 0.0).unwrap();
        let bad = DriverConfig {
            delta: 0.0,
            ..DriverConfig::default()
        };
        assert!(DrivingProcess::new(bad, m, GpsFeed::exact(m)).is_err());
    }
}
