use crate::quad::integrate;
use crate::AnalysisError;

pub fn erlang_pdf(k: u32, mu: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let mut ln_fact = 0.0;
    for i in 1..k {
        ln_fact += (i as f64).ln();
    }
    if x == 0.0 {
        return if k == 1 { mu } else { 0.0 };
    }
    (k as f64 * mu.ln() + (k as f64 - 1.0) * x.ln() - mu * x - ln_fact).exp()
}

/// CDF of a `k`-stage Erlang with per-stage rate `mu`.
pub fn erlang_cdf(k: u32, mu: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mx = mu * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..k {
        term *= mx / i as f64;
        sum += term;
    }
    (1.0 - (-mx).exp() * sum).clamp(0.0, 1.0)
}

fn survival(k: u32, mu: f64, x: f64) -> f64 {
    let mx = mu * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..k {
        term *= mx / i as f64;
        sum += term;
    }
    ((-mx).exp() * sum).min(1.0)
}

/// Expected completion time of `p_procs` parallel `k`-stage Erlang tasks,
/// i.e. the mean of their maximum.
pub fn t_async(p_procs: u32, k: u32, mu: f64) -> Result<f64, AnalysisError> {
    if p_procs < 1 || k < 1 || !(mu > 0.0) {
        return Err(AnalysisError::Invalid("t_async"));
    }
    if p_procs == 1 {
        return Ok(k as f64 / mu);
    }
    let p = p_procs as f64;
    let mut upper = (k as f64 + 10.0) / mu;
    while p * survival(k, mu, upper) > 1e-17 {
        upper *= 2.0;
        if upper > 1e12 {
            return Err(AnalysisError::NonConvergent);
        }
    }
    let f = |x: f64| {
        let s = survival(k, mu, x);
        // 1 - (1 - s)^P without cancellation for small s
        -((-s).ln_1p() * p).exp_m1()
    };
    let knots = 16;
    let mut total = 0.0;
    for i in 0..knots {
        let a = upper * i as f64 / knots as f64;
        let b = upper * (i + 1) as f64 / knots as f64;
        total += integrate(&f, a, b, 1e-13)?;
    }
    Ok(total)
}

/// Mean time of `k_updates × p_procs` sequential exponential stages.
pub fn t_seq(k_updates: u32, p_procs: u32, mu: f64) -> f64 {
    k_updates as f64 * p_procs as f64 / mu
}

pub fn s_parallel(p_procs: u32, k: u32, mu: f64) -> Result<f64, AnalysisError> {
    Ok(t_seq(k, p_procs, mu) / t_async(p_procs, k, mu)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erlang_cdf_examples() {
        assert!((erlang_cdf(1, 1.0, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((erlang_cdf(1, 1.0, 1.0) - 0.63212).abs() < 1e-5);
        for k in 1..6 {
            assert_eq!(erlang_cdf(k, 2.0, 0.0), 0.0);
        }
    }

    #[test]
    fn t_async_examples() {
        assert_eq!(t_async(1, 3, 0.5).unwrap(), 6.0);
        assert!((t_async(2, 1, 1.0).unwrap() - 1.5).abs() < 1e-10);
        // harmonic numbers for exponential maxima
        let h4 = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        assert!((t_async(4, 1, 2.0).unwrap() - h4 / 2.0).abs() < 1e-10);
    }

    #[test]
    fn t_seq_and_speedup() {
        assert_eq!(t_seq(1, 1, 1.0), 1.0);
        assert_eq!(t_seq(2, 3, 0.5), 12.0);
        assert_eq!(s_parallel(1, 4, 0.7).unwrap(), 1.0);
        assert!((s_parallel(2, 1, 1.0).unwrap() - 2.0 / 1.5).abs() < 1e-10);
        let mut prev = 0.0;
        for p in 1..=8 {
            let s = s_parallel(p, 2, 1.0).unwrap();
            assert!(s >= prev);
            prev = s;
        }
    }
}
