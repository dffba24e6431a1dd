use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use vnc_analysis::*;

#[test]
fn t_async_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mu = 1.3;
    let exp = Exp::new(mu).unwrap();
    let n = 40_000;
    for p in 1..=4u32 {
        for k in 1..=4u32 {
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..n {
                let mut mx = 0.0f64;
                for _ in 0..p {
                    let t: f64 = (0..k).map(|_| exp.sample(&mut rng)).sum();
                    mx = mx.max(t);
                }
                sum += mx;
                sum2 += mx * mx;
            }
            let mean = sum / n as f64;
            let var = sum2 / n as f64 - mean * mean;
            let se = (var / n as f64).sqrt();
            let exact = t_async(p, k, mu).unwrap();
            assert!(
                (exact - mean).abs() < 3.0 * se,
                "P={p} K={k}: {exact} vs {mean} ± {se}"
            );
        }
    }
}

#[test]
fn erlang_cdf_matches_integrated_pdf() {
    for k in 1..=6u32 {
        for &x in &[0.2, 1.0, 3.5, 9.0] {
            let q = quad::integrate(&|t| erlang_pdf(k, 0.8, t), 0.0, x, 1e-13).unwrap();
            assert!((q - erlang_cdf(k, 0.8, x)).abs() < 1e-10);
        }
    }
}

fn choose(n: u32, k: u32) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

#[test]
fn binomial_matches_enumeration() {
    for n in 0..=12u32 {
        for &p in &[0.0f64, 0.05, 0.3, 0.5, 0.9, 1.0] {
            // enumerate every outcome vector
            let mut counts = vec![0.0; n as usize + 1];
            for mask in 0u32..(1 << n) {
                let ones = mask.count_ones();
                counts[ones as usize] += p.powi(ones as i32) * (1.0 - p).powi((n - ones) as i32);
            }
            let pmf = binomial_pmf(n, p);
            for k in 0..=n as usize {
                assert!((pmf[k] - counts[k]).abs() < 1e-12);
                let closed = choose(n, k as u32) * p.powi(k as i32) * (1.0 - p).powi((n - k as u32) as i32);
                assert!((pmf[k] - closed).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn optimal_partition_isolates_slow_task() {
    let mut tasks = vec![
        SlpTask {
            mean_time: 1.0,
            p_rollback: 0.1,
            rb_time: 1.0
        };
        5
    ];
    tasks[2].mean_time = 50.0;
    let best = optimal_partition(&tasks).unwrap();
    // independent exhaustive oracle over the 16 cut sets
    let mut oracle = (f64::INFINITY, 0usize);
    for cuts in 0u32..16 {
        let mut sizes = vec![];
        let mut run = 1;
        for i in 0..4 {
            if cuts >> i & 1 == 1 {
                sizes.push(run);
                run = 1;
            } else {
                run += 1;
            }
        }
        sizes.push(run);
        let mut t = 0.0;
        let mut at = 0;
        for s in &sizes {
            let g = &tasks[at..at + s];
            let m: f64 = g.iter().map(|x| x.mean_time).sum();
            let pr: f64 = g.iter().map(|x| x.p_rollback).sum();
            let rb: f64 = g.iter().map(|x| x.rb_time).sum();
            t += m * (1.0 + pr * rb);
            at += s;
        }
        if t < oracle.0 {
            oracle = (t, sizes.len());
        }
    }
    let t = slp_partition_time(&tasks, &best).unwrap();
    assert!((t - oracle.0).abs() < 1e-12);
    let mut start = 0;
    let slow_group = best
        .iter()
        .find(|&&s| {
            let hit = (start..start + s).contains(&2);
            start += s;
            hit
        })
        .copied();
    assert_eq!(slow_group, Some(1));
}

fn arb_params() -> impl Strategy<Value = AnalysisParams> {
    (
        0.01f64..1.0,
        0.0f64..100.0,
        0.0f64..20.0,
        0.0f64..20.0,
        0.0f64..1.0,
        0.0f64..1.0,
        1u32..20,
        -50.0f64..50.0,
    )
        .prop_map(|(l, d, tau, rb, x, y, n, c)| AnalysisParams {
            lambda_vm: l,
            delta_vm: d,
            tau_task: tau,
            tau_rb: rb,
            ex_x: x,
            y_p: y,
            y_n: n,
            c_offset: c,
            ..AnalysisParams::default()
        })
}

proptest! {
    #[test]
    fn phase_probabilities_sum_to_one(p in arb_params(), t in 0.0f64..100.0) {
        let ph = phase_probabilities(&p, t);
        prop_assert!((ph.p_cache + ph.p_late + ph.p_slow - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prediction_rate_monotone(p in arb_params(), bump in 0.01f64..1.0) {
        let base = prediction_rate(&p).unwrap();
        let mut q = p.clone(); q.tau_task += bump;
        prop_assert!(prediction_rate(&q).unwrap() <= base + 1e-12);
        let mut q = p.clone(); q.tau_rb += bump;
        prop_assert!(prediction_rate(&q).unwrap() <= base + 1e-12);
        let mut q = p.clone(); q.ex_x = (q.ex_x + bump).min(1.0);
        prop_assert!(prediction_rate(&q).unwrap() <= base + 1e-12);
        let mut q = p.clone(); q.delta_vm += bump;
        prop_assert!(prediction_rate(&q).unwrap() >= base - 1e-12);
        // E[Y] lowers PR only while λΔS > 1
        if p.lambda_vm * p.delta_vm > 1.0 {
            let mut q = p.clone(); q.y_p = (q.y_p + bump).min(1.0);
            prop_assert!(prediction_rate(&q).unwrap() <= base + 1e-12);
        }
    }

    #[test]
    fn chebycheff_bounded_and_decreasing(s2 in 0.01f64..10.0, th in 0.01f64..10.0) {
        let a = chebycheff_pot(s2, th);
        prop_assert!((0.0..=1.0).contains(&a));
        let b = chebycheff_pot(s2, th * 1.1);
        if a < 1.0 { prop_assert!(b < a); }
    }

    #[test]
    fn s_parallel_nondecreasing(p in 1u32..8, k in 1u32..5, mu in 0.1f64..5.0) {
        let a = s_parallel(p, k, mu).unwrap();
        let b = s_parallel(p + 1, k, mu).unwrap();
        prop_assert!(b >= a - 1e-9);
    }

    #[test]
    fn gradient_matches_central_differences(p in arb_params()) {
        let g = pr_gradient(&p);
        let f = |q: &AnalysisParams| {
            // expanded form avoids the 1/λ singularity
            let ds = q.delta_vm * q.s_parallel;
            q.lambda_vm * (ds - q.tau_task - (q.tau_task + q.tau_rb) * q.ex_x - ds * q.y_p) + q.y_p
        };
        for (i, k) in Param::ALL.iter().enumerate() {
            let v = k.get(&p);
            let h = 1e-6 * v.abs().max(1.0);
            let mut a = p.clone(); k.set(&mut a, v + h);
            let mut b = p.clone(); k.set(&mut b, v - h);
            let fd = (f(&a) - f(&b)) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() < 1e-5, "{:?}: {} vs {}", k, fd, g[i]);
        }
    }
}
