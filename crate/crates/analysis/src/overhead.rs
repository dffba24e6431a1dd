use std::f64::consts::FRAC_PI_2;

use statrs::function::erf::erfc;

/// Chebycheff bound on the out-of-tolerance probability.
pub fn chebycheff_pot(sigma2: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return if sigma2 > 0.0 { 1.0 } else { 0.0 };
    }
    (sigma2 / (theta * theta)).min(1.0)
}

/// Expected time between rollbacks anywhere in a system of `n_lps` LPs.
/// `None` when rollback cannot happen.
pub fn inter_rollback_time(p_oo: f64, p_ot: f64, r_m: f64, n_lps: u32) -> Option<f64> {
    let rate = n_lps as f64 * r_m * (p_oo + p_ot);
    if rate > 0.0 {
        Some(1.0 / rate)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaForms {
    /// `(λv/λrb + λv)/λr` as printed.
    pub verbatim: f64,
    /// `1 + (λv + anti_rate)/λr` with `anti_rate = λv·min(1, λrb·window)`.
    pub count: f64,
}

pub fn beta_analytic(lambda_v: f64, lambda_r: f64, lambda_rb: f64, window: f64) -> BetaForms {
    let verbatim = (lambda_v / lambda_rb + lambda_v) / lambda_r;
    let anti_rate = lambda_v * (lambda_rb * window).min(1.0);
    BetaForms {
        verbatim,
        count: 1.0 + (lambda_v + anti_rate) / lambda_r,
    }
}

/// Error carried through a chain of LPs.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulatedError {
    pub me0: f64,
    /// Value after each hop.
    pub ac_n: Vec<f64>,
    /// Cumulative processing time at each hop.
    pub elapsed: Vec<f64>,
}

impl AccumulatedError {
    /// Error after every hop completed within `tau`.
    pub fn ac_t(&self, tau: f64) -> f64 {
        let hops = self.elapsed.partition_point(|&t| t <= tau);
        if hops == 0 {
            self.me0
        } else {
            self.ac_n[hops - 1]
        }
    }
}

pub fn accumulated_error(me0: f64, chain: &[(&dyn Fn(f64, f64) -> f64, f64)]) -> AccumulatedError {
    let mut e = me0;
    let mut t = 0.0;
    let mut ac_n = Vec::with_capacity(chain.len());
    let mut elapsed = Vec::with_capacity(chain.len());
    for (ce, t_lp) in chain {
        e = ce(e, *t_lp);
        t += t_lp;
        ac_n.push(e);
        elapsed.push(t);
    }
    AccumulatedError { me0, ac_n, elapsed }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PositionError {
    Gaussian { sigma: f64 },
    Exponential { rate: f64 },
}

/// Probability that position error at distance `d` swings the beam by more
/// than `theta` radians.
pub fn beam_alpha(err: PositionError, d: f64, theta: f64) -> f64 {
    if theta >= FRAC_PI_2 || d.is_infinite() {
        return 0.0;
    }
    let edge = d * theta.tan();
    match err {
        PositionError::Gaussian { sigma } => {
            if sigma == 0.0 {
                return 0.0;
            }
            erfc(edge / (sigma * std::f64::consts::SQRT_2))
        }
        PositionError::Exponential { rate } => (-rate * edge).exp(),
    }
}

pub fn utility(eta: f64, alpha: f64, beta: f64, phi_s: f64, phi_w: f64, phi_b: f64) -> f64 {
    eta * phi_s - alpha * phi_w - beta * phi_b
}

/// Polling bandwidth as a percentage of total bandwidth `bw_total`.
pub fn polling_overhead(p_pkts: f64, n_devices: f64, s_bits: f64, t_period: f64, bw_total: f64) -> f64 {
    100.0 * (p_pkts * n_devices * s_bits / t_period) / bw_total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebycheff_examples() {
        assert_eq!(chebycheff_pot(1.0, 2.0), 0.25);
        assert!(chebycheff_pot(1.0, 1e9) < 1e-15);
        assert_eq!(chebycheff_pot(4.0, 1.0), 1.0);
    }

    #[test]
    fn inter_rollback_examples() {
        assert_eq!(inter_rollback_time(0.5, 0.5, 1.0, 1), Some(1.0));
        let a = inter_rollback_time(0.1, 0.1, 1.0, 3).unwrap();
        let b = inter_rollback_time(0.1, 0.1, 0.5, 3).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
        let t = inter_rollback_time(0.0, 0.25, 2.0 / 30.0, 2).unwrap();
        assert!((t - 30.0).abs() < 1e-12);
        assert_eq!(inter_rollback_time(0.0, 0.0, 1.0, 2), None);
    }

    #[test]
    fn beta_examples() {
        let b = beta_analytic(1.0, 1.0, 0.0, 10.0);
        assert_eq!(b.count, 2.0);
        let far = beta_analytic(0.3, 0.2, 1e12, 1.0);
        assert!((far.verbatim - 0.3 / 0.2).abs() < 1e-9);
        let lo = beta_analytic(0.3, 0.2, 0.5, 1.0).verbatim;
        let hi = beta_analytic(0.3, 0.2, 0.6, 1.0).verbatim;
        assert!(hi < lo);
    }

    #[test]
    fn accumulated_error_examples() {
        let id = |e: f64, _t: f64| e;
        let add = |e: f64, t: f64| e + t;
        let a = accumulated_error(0.7, &[(&id, 1.0), (&id, 1.0)]);
        assert_eq!(a.ac_n, vec![0.7, 0.7]);
        let b = accumulated_error(0.0, &[(&add, 1.0), (&add, 2.0), (&add, 3.0)]);
        assert_eq!(b.ac_n, vec![1.0, 3.0, 6.0]);
        assert_eq!(b.ac_t(0.0), 0.0);
        assert_eq!(b.ac_t(3.5), 3.0);
    }

    #[test]
    fn beam_alpha_limits() {
        let g = PositionError::Gaussian { sigma: 1.0 };
        assert_eq!(beam_alpha(g, 100.0, FRAC_PI_2), 0.0);
        assert_eq!(beam_alpha(g, f64::INFINITY, 0.1), 0.0);
        assert!(beam_alpha(g, 1e6, 0.1) < 1e-300);
    }

    #[test]
    fn utility_and_polling() {
        assert_eq!(utility(3.0, 0.2, 2.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(utility(3.0, 0.2, 2.0, 1.0, 0.0, 0.0), 3.0);
        assert_eq!(utility(3.5, 0.0, 2.0, 1.0, 0.0, 1.0), 1.5);
        assert_eq!(polling_overhead(1.0, 1.0, 1.0, 1.0, 100.0), 1.0);
        assert!(polling_overhead(1.0, 1.0, 1.0, 1e300, 100.0) < 1e-290);
        assert_eq!(polling_overhead(1.0, 2.0, 1.0, 1.0, 100.0), 2.0);
    }
}
