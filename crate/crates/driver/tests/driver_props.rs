use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vnc_core::Mode;
use vnc_driver::*;

#[test]
fn sample_means_within_three_standard_errors() {
    let n = 100_000;
    let p0 = Position::new(0.0, 0.0);
    let models = [
        (
            ErrorModel::Normal {
                mean: 0.0,
                variance: 1.0,
            },
            1.0,
        ),
        (
            ErrorModel::Normal {
                mean: 2.5,
                variance: 4.0,
            },
            2.0,
        ),
        (ErrorModel::Exponential { rate: 0.5 }, 2.0),
    ];
    for (i, (m, sd)) in models.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            let p = inject_error(p0, m, &mut rng).unwrap();
            sx += p.x;
            sy += p.y;
        }
        let se = sd / (n as f64).sqrt();
        assert!((sx / n as f64 - m.mean()).abs() < 3.0 * se, "{m:?} x");
        assert!((sy / n as f64 - m.mean()).abs() < 3.0 * se, "{m:?} y");
    }
}

fn run(cfg: DriverConfig, speed: f64, dir: f64, dt: f64, until: f64) -> (DrivingProcess, Vec<(f64, vnc_core::VncMessage<Position>)>) {
    let m = MotionState::new(Position::new(0.0, 0.0), speed, dir, 0.0).unwrap();
    let mut d = DrivingProcess::new(cfg, m, GpsFeed::exact(m)).unwrap();
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * dt;
        if t >= until {
            break;
        }
        for msg in step_driver(&mut d, t) {
            out.push((t, msg));
        }
        k += 1;
    }
    (d, out)
}

proptest! {
    #[test]
    fn virtual_order_and_classification(
        seed in 0u64..1000,
        lambda in 1.0f64..50.0,
        delta in 0.5f64..5.0,
        period in 0.5f64..5.0,
        dt in 0.05f64..1.0,
    ) {
        let cfg = DriverConfig { seed, lambda, delta, update_period: period, ..DriverConfig::default() };
        let (_, out) = run(cfg, 0.3, 45.0, dt, 60.0);
        let mut last = f64::NEG_INFINITY;
        for (t, m) in &out {
            if m.origin_real_time > *t {
                prop_assert!(m.recv_time > last);
                last = m.recv_time;
                prop_assert!(m.send_time <= *t + lambda);
            } else {
                prop_assert!(m.origin_real_time <= *t);
            }
        }
    }

    #[test]
    fn real_opt_within_tolerance_sends_at_most_one(
        seed in 0u64..1000,
        var in 0.0f64..0.01,
        period in 0.5f64..5.0,
    ) {
        // error stays far below the tolerance so every prediction is usable
        let cfg = DriverConfig {
            seed,
            update_period: period,
            delta: period,
            error_model: ErrorModel::Normal { mean: 0.0, variance: var },
            real_opt: true,
            downstream_min_theta: 10.0,
            ..DriverConfig::default()
        };
        let (d, out) = run(cfg, 0.5, 10.0, 0.1, 120.0);
        let reals = out.iter().filter(|(t, m)| m.is_real(*t)).count();
        prop_assert!(reals <= 1);
        prop_assert_eq!(d.counters.real_out, reals as u64);
    }

    #[test]
    fn sequential_emits_only_reals(period in 0.5f64..4.0) {
        let cfg = DriverConfig { mode: Mode::Sequential, update_period: period, ..DriverConfig::default() };
        let (d, out) = run(cfg, 0.1, 0.0, 0.1, 30.0);
        prop_assert_eq!(d.counters.virtual_out, 0);
        prop_assert!(out.iter().all(|(t, m)| m.is_real(*t)));
    }
}
