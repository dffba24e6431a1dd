use std::f64::consts::FRAC_PI_4;

use crate::quad::integrate;
use crate::{AnalysisError, AnalysisParams};

/// Prediction rate for explicit parameter values.
pub fn pr_at(lambda: f64, delta: f64, s_par: f64, tau: f64, tau_rb: f64, x: f64, y: f64) -> f64 {
    let ds = delta * s_par;
    lambda * (ds - tau - (tau + tau_rb) * x - (ds - 1.0 / lambda) * y)
}

/// Virtual time gained per unit of real time.
pub fn prediction_rate(p: &AnalysisParams) -> Result<f64, AnalysisError> {
    if p.lambda_vm == 0.0 {
        return Err(AnalysisError::ZeroRate);
    }
    Ok(pr_at(
        p.lambda_vm,
        p.delta_vm,
        p.s_parallel,
        p.tau_task,
        p.tau_rb,
        p.ex_x,
        p.ex_y(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookaheadStats {
    pub la_max: f64,
    pub expected_la: f64,
    /// Uniform density on `[0, la_max]`.
    pub density: f64,
}

pub fn lookahead_stats(p: &AnalysisParams) -> Result<LookaheadStats, AnalysisError> {
    let pr = prediction_rate(p)?;
    if !pr.is_finite() {
        return Err(AnalysisError::UndefinedRate);
    }
    let la_max = p.big_lambda * (1.0 - (pr.atan() - FRAC_PI_4).cos());
    Ok(LookaheadStats {
        la_max,
        expected_la: la_max / 2.0,
        density: 1.0 / la_max,
    })
}

pub fn cache_speedup(p: &AnalysisParams, expected_la: f64) -> f64 {
    if expected_la > p.tau_task {
        p.c_r
    } else {
        p.tau_task / ((p.tau_task - expected_la) + p.cache_read)
    }
}

/// `(γ1, γ2)` of the lookahead line `LA = γ1 − γ2·Y` at real time `t`.
pub fn gammas(p: &AnalysisParams, t: f64) -> (f64, f64) {
    let l = p.lambda_vm;
    let ds = p.delta_vm * p.s_parallel;
    let g1 = (l * ds - l * p.tau_task - l * (p.tau_rb + p.tau_task) * p.ex_x - 1.0) * t + p.c_offset;
    let g2 = l * (ds - 1.0 / l + p.tau_rb) * t;
    (g1, g2)
}

pub fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let n = n as usize;
    if p <= 0.0 {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        return v;
    }
    if p >= 1.0 {
        let mut v = vec![0.0; n + 1];
        v[n] = 1.0;
        return v;
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let mut ln_c = 0.0f64;
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            ln_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        out.push((ln_c + k as f64 * ln_p + (n - k) as f64 * ln_q).exp());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseProbabilities {
    pub p_cache: f64,
    pub p_late: f64,
    pub p_slow: f64,
}

/// Probabilities that the cached result is early, late, or slower than
/// direct computation, with `Y ~ Binomial(n, p)/n`.
pub fn phase_probabilities(p: &AnalysisParams, t: f64) -> PhaseProbabilities {
    let (g1, g2) = gammas(p, t);
    let pmf = binomial_pmf(p.y_n, p.y_p);
    let n = p.y_n.max(1) as f64;
    let (mut c, mut l, mut s) = (0.0, 0.0, 0.0);
    if g2 > 0.0 {
        let lo = (g1 - p.tau_task) / g2;
        let hi = g1 / g2;
        for (k, w) in pmf.iter().enumerate() {
            let y = k as f64 / n;
            if y < lo {
                c += w;
            } else if y <= hi {
                l += w;
            } else {
                s += w;
            }
        }
    } else {
        for (k, w) in pmf.iter().enumerate() {
            let la = g1 - g2 * (k as f64 / n);
            if la > p.tau_task {
                c += w;
            } else if la >= 0.0 {
                l += w;
            } else {
                s += w;
            }
        }
    }
    PhaseProbabilities {
        p_cache: c,
        p_late: l,
        p_slow: s,
    }
}

/// Mean of `f` over `[0, t_l]`.
pub fn time_averaged(f: &dyn Fn(f64) -> f64, t_l: f64) -> Result<f64, AnalysisError> {
    if !(t_l > 0.0) {
        return Err(AnalysisError::Invalid("t_l"));
    }
    Ok(integrate(f, 0.0, t_l, 1e-10)? / t_l)
}

/// Expected speedup from time-averaged phase probabilities.
pub fn eta(p: &AnalysisParams) -> Result<f64, AnalysisError> {
    let pr = prediction_rate(p)?;
    let t_l = match p.t_l {
        Some(t) => t,
        None => p.big_lambda * pr.atan().cos(),
    };
    let cache = time_averaged(&|t| phase_probabilities(p, t).p_cache, t_l)?;
    let late = time_averaged(&|t| phase_probabilities(p, t).p_late, t_l)?;
    let slow = time_averaged(&|t| phase_probabilities(p, t).p_slow, t_l)?;
    Ok(cache * p.c_r + (late + slow) * pr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> AnalysisParams {
        AnalysisParams::default()
    }

    #[test]
    fn prediction_rate_examples() {
        let p = base();
        assert!((prediction_rate(&p).unwrap() - 4.0).abs() < 1e-12);
        let mut q = base();
        q.y_p = 1.0;
        let pr = prediction_rate(&q).unwrap();
        let expect = q.lambda_vm * (1.0 / q.lambda_vm - q.tau_task);
        assert!((pr - expect).abs() < 1e-12 && pr <= 1.0);
        let mut z = base();
        z.delta_vm = z.tau_task;
        assert!(prediction_rate(&z).unwrap().abs() < 1e-12);
        z.lambda_vm = 0.0;
        assert_eq!(prediction_rate(&z), Err(AnalysisError::ZeroRate));
    }

    #[test]
    fn lookahead_examples() {
        let mut p = base();
        p.big_lambda = 30.0;
        let s = lookahead_stats(&p).unwrap();
        let expect = 30.0 * (1.0 - (4.0f64.atan() - FRAC_PI_4).cos());
        assert!((s.la_max - expect).abs() < 1e-12);
        assert!((s.la_max - 4.28).abs() < 0.01);
        assert_eq!(s.expected_la, s.la_max / 2.0);
        // PR = 1 puts the angle at π/4
        let mut q = base();
        q.delta_vm = q.tau_task + 1.0 / q.lambda_vm;
        let s = lookahead_stats(&q).unwrap();
        assert!(s.la_max.abs() < 1e-12);
    }

    #[test]
    fn cache_speedup_examples() {
        let mut p = base();
        p.cache_read = 0.0;
        assert_eq!(cache_speedup(&p, 0.0), 1.0);
        assert_eq!(cache_speedup(&p, p.tau_task / 2.0), 2.0);
        p.tau_task = 8.0;
        p.c_r = 8.0 / 2.29;
        assert!((cache_speedup(&p, 9.0) - 3.49).abs() < 0.01);
    }

    #[test]
    fn phase_probabilities_degenerate_y() {
        let mut p = base();
        p.y_p = 0.0;
        let (g1, _) = gammas(&p, 10.0);
        let ph = phase_probabilities(&p, 10.0);
        assert_eq!(ph.p_cache, if g1 > p.tau_task { 1.0 } else { 0.0 });
        p.y_p = 1.0;
        let ph = phase_probabilities(&p, 10.0);
        assert_eq!(ph.p_cache + ph.p_late + ph.p_slow, 1.0);
        assert!(ph.p_cache == 1.0 || ph.p_late == 1.0 || ph.p_slow == 1.0);
    }

    #[test]
    fn time_average_examples() {
        assert!((time_averaged(&|_| 0.3, 7.0).unwrap() - 0.3).abs() < 1e-12);
        assert!((time_averaged(&|t| t / 4.0, 4.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eta_limits() {
        let mut p = base();
        p.c_offset = 1000.0;
        assert!((eta(&p).unwrap() - p.c_r).abs() < 1e-9);
        let mut q = base();
        q.c_offset = -1000.0;
        q.y_p = 1.0;
        let pr = prediction_rate(&q).unwrap();
        assert!(pr < 1.0);
        assert!(eta(&q).unwrap() < 1.0);
    }
}
