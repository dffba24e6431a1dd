use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::DriverError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Linear motion from the last fix. Direction is in degrees, 0 = +y, 90 = +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionState {
    pub position: Position,
    pub speed: f64,
    pub direction: f64,
    pub t0: f64,
}

impl MotionState {
    pub fn new(position: Position, speed: f64, direction: f64, t0: f64) -> Option<Self> {
        if !(speed >= 0.0) || !(0.0..360.0).contains(&direction) {
            return None;
        }
        Some(MotionState {
            position,
            speed,
            direction,
            t0,
        })
    }
}

pub fn predict_position(m: &MotionState, tau: f64) -> Position {
    let dt = tau - m.t0;
    let rad = m.direction.to_radians();
    Position {
        x: m.position.x + m.speed * dt * rad.sin(),
        y: m.position.y + m.speed * dt * rad.cos(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ErrorModel {
    None,
    Normal { mean: f64, variance: f64 },
    Exponential { rate: f64 },
}

impl ErrorModel {
    pub fn validate(&self) -> Result<(), DriverError> {
        match *self {
            ErrorModel::None => Ok(()),
            ErrorModel::Normal { mean, variance } => {
                if !mean.is_finite() || !(variance >= 0.0) || !variance.is_finite() {
                    Err(DriverError::InvalidDistribution("normal"))
                } else {
                    Ok(())
                }
            }
            ErrorModel::Exponential { rate } => {
                if !(rate > 0.0) || !rate.is_finite() {
                    Err(DriverError::InvalidDistribution("exponential"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ErrorModel::None => 0.0,
            ErrorModel::Normal { mean, .. } => mean,
            ErrorModel::Exponential { rate } => 1.0 / rate,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, DriverError> {
        match *self {
            ErrorModel::None => Ok(0.0),
            ErrorModel::Normal { mean, variance } => Normal::new(mean, variance.sqrt())
                .map(|d| d.sample(rng))
                .map_err(|_| DriverError::InvalidDistribution("normal")),
            ErrorModel::Exponential { rate } => Exp::new(rate)
                .map(|d| d.sample(rng))
                .map_err(|_| DriverError::InvalidDistribution("exponential")),
        }
    }
}

/// Adds an independent error sample to each coordinate.
pub fn inject_error<R: Rng + ?Sized>(
    p: Position,
    model: &ErrorModel,
    rng: &mut R,
) -> Result<Position, DriverError> {
    model.validate()?;
    if let ErrorModel::None = model {
        return Ok(p);
    }
    let ex = model.sample(rng)?;
    let ey = model.sample(rng)?;
    Ok(Position::new(p.x + ex, p.y + ey))
}

/// Simulated GPS receiver: the true trajectory plus optional fix noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpsFeed {
    pub truth: MotionState,
    pub noise: ErrorModel,
}

impl GpsFeed {
    pub fn exact(truth: MotionState) -> Self {
        GpsFeed {
            truth,
            noise: ErrorModel::None,
        }
    }

    pub fn read<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Position {
        let p = predict_position(&self.truth, t);
        inject_error(p, &self.noise, rng).unwrap_or(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: Position, b: Position) -> bool {
        a.distance(&b) < 1e-12
    }

    #[test]
    fn predict_examples() {
        let m = MotionState::new(Position::new(0.0, 0.0), 0.1, 0.0, 0.0).unwrap();
        assert!(close(predict_position(&m, 10.0), Position::new(0.0, 1.0)));
        let still = MotionState::new(Position::new(3.0, -2.0), 0.0, 45.0, 1.0).unwrap();
        assert_eq!(predict_position(&still, 1e6), still.position);
        let east = MotionState::new(Position::new(0.0, 0.0), 1.0, 90.0, 0.0).unwrap();
        assert!(close(predict_position(&east, 3.0), Position::new(3.0, 0.0)));
        assert!(MotionState::new(Position::new(0.0, 0.0), -1.0, 0.0, 0.0).is_none());
        assert!(MotionState::new(Position::new(0.0, 0.0), 1.0, 360.0, 0.0).is_none());
    }

    #[test]
    fn none_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Position::new(1.5, -2.0);
        assert_eq!(inject_error(p, &ErrorModel::None, &mut rng).unwrap(), p);
    }

    #[test]
    fn invalid_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Position::new(0.0, 0.0);
        let bad = ErrorModel::Normal {
            mean: 0.0,
            variance: -1.0,
        };
        assert!(inject_error(p, &bad, &mut rng).is_err());
        assert!(inject_error(p, &ErrorModel::Exponential { rate: 0.0 }, &mut rng).is_err());
    }

    #[test]
    fn reproducible_under_seed() {
        let m = ErrorModel::Normal {
            mean: 0.0,
            variance: 1.0,
        };
        let p = Position::new(0.0, 0.0);
        let a = inject_error(p, &m, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = inject_error(p, &m, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
