use vnc_harness::*;

fn lpseq(seed: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig::new("slp_chain");
    for (k, v) in [
        ("theta", "2"),
        ("lambda", "300"),
        ("update_period", "2"),
        ("error", "normal(0,1)"),
        ("duration", "1200"),
    ] {
        c.set(k, v);
    }
    c.set("seed", seed);
    c
}

#[test]
fn tolerance_fraction_tracks_accumulated_error() {
    for seed in 0..3 {
        let r = run_scenario(&lpseq(seed)).unwrap();
        let f = r.scalars["tolerance_rollback_fraction"];
        eprintln!("seed {seed}: fraction {f:.3} {:?}", r.scalars);
        assert!(r.scalars["driver.virtual_out"] >= 500.0);
        // per-hop χ² tail with variance growing by one per hop
        let expect = [(-2.0f64).exp(), (-1.0f64).exp(), (-2.0f64 / 3.0).exp()];
        for (k, e) in expect.iter().enumerate() {
            let got = r.scalars[&format!("lp{}.tolerance_rollback_fraction", k + 1)];
            assert!((got - e).abs() < 0.12, "lp{} {got} vs {e}", k + 1);
        }
    }
}

#[test]
fn transport_conserves_messages() {
    let mut c = lpseq(5);
    c.set("duration", "300");
    c.set("transport.dup", "0.1");
    c.set("transport.reorder", "0.05");
    let r = run_scenario(&c).unwrap();
    let t = &r.transport;
    assert_eq!(t.sent + t.duplicated, t.delivered + t.dropped + t.in_flight());
    assert_eq!(r.total_load(), t.sent);
}

#[test]
fn lvt_trace_drops_only_on_rollback() {
    let mut c = lpseq(1);
    c.set("error", "none");
    c.set("duration", "400");
    let r = run_scenario(&c).unwrap();
    let lp1: Vec<_> = r.lvt_trace.iter().filter(|(_, lp, _)| lp == "lp1").collect();
    assert!(lp1.windows(2).all(|w| w[1].2 >= w[0].2));
    let lead = lp1.iter().map(|(t, _, l)| l - t).fold(f64::MIN, f64::max);
    assert!(lead > 300.0 - 2.0 && lead <= 300.0 + 1e-9, "lead {lead}");
}
