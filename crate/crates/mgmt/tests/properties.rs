use proptest::prelude::*;
use vnc_mgmt::{simulate, MgmtParams, MgmtTriple};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn queries_and_rollbacks_obey_the_triple(
        lambda in 1.0f64..50.0,
        theta in 1u32..8,
        upsilon in 1u32..10,
        noise in 0.0f64..1.0,
        seed in 0u64..1000,
    ) {
        let triple = MgmtTriple::new(lambda, theta as f64, upsilon as f64).unwrap();
        let r = simulate(&MgmtParams { triple, noise, duration: 200.0, seed, ..MgmtParams::default() }).unwrap();
        prop_assert!(r.scalars["mgmt.min_query_gap"] >= upsilon as f64 - 1e-9);
        prop_assert!(r.scalars["mgmt.min_final_lead"] >= 0.0);
        for row in &r.tables["mgmt_run.csv"].rows {
            let err: i64 = row[4].parse().unwrap();
            if row[5] == "verification_query" {
                prop_assert!(err.abs() > theta as i64);
            } else if row[5] == "none" {
                prop_assert!(err.abs() <= theta as i64);
            }
        }
    }

    #[test]
    fn exact_model_commits_true_counts(lambda in 1.0f64..100.0, seed in 0u64..1000) {
        let triple = MgmtTriple::new(lambda, 1.0, 2.0).unwrap();
        let r = simulate(&MgmtParams { triple, noise: 0.0, duration: 200.0, seed, ..MgmtParams::default() }).unwrap();
        prop_assert_eq!(r.scalars["mgmt.verification_rollbacks"], 0.0);
        prop_assert_eq!(r.scalars["mgmt.commit_mismatches"], 0.0);
        prop_assert_eq!(r.scalars["mgmt.commit_decreases"], 0.0);
    }
}
