use munes::loopdet::{descriptor_distance, LoopDb, LoopDbConfig, ScanContext};
use proptest::prelude::*;

const RINGS: usize = 20;
const SECTORS: usize = 60;

fn context() -> impl Strategy<Value = ScanContext> {
    prop::collection::vec(prop::option::weighted(0.3, 0.1f64..4.0), RINGS * SECTORS).prop_map(|cells| {
        let mut sc = ScanContext::zeros(RINGS, SECTORS);
        for (n, v) in cells.into_iter().enumerate() {
            if let Some(v) = v {
                sc.set(n / SECTORS, n % SECTORS, v);
            }
        }
        sc
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn self_distance_is_zero(a in context()) {
        prop_assume!(!a.is_empty());
        let (d, _) = descriptor_distance(&a, &a).unwrap();
        prop_assert!(d.abs() < 1e-12);
    }

    #[test]
    fn distance_is_symmetric(a in context(), b in context()) {
        let (dab, _) = descriptor_distance(&a, &b).unwrap();
        let (dba, _) = descriptor_distance(&b, &a).unwrap();
        prop_assert!((dab - dba).abs() < 1e-12);
    }

    #[test]
    fn joint_shift_keeps_distance(a in context(), b in context(), s in 0usize..SECTORS) {
        let (d0, k0) = descriptor_distance(&a, &b).unwrap();
        let (d1, k1) = descriptor_distance(&a.shifted(s), &b.shifted(s)).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-12);
        prop_assert_eq!(k0 % SECTORS, k1 % SECTORS);
    }

    #[test]
    fn queries_stay_on_their_floor(
        entries in prop::collection::vec((context(), 0i32..3), 5..40),
        queries in prop::collection::vec((context(), 0i32..3), 1..10),
    ) {
        let cfg = LoopDbConfig { accept_threshold: 0.99, exclusion_gap: 1, ..LoopDbConfig::default() };
        let mut db = LoopDb::new(&cfg);
        for (id, (sc, floor)) in entries.iter().enumerate() {
            db.insert(id, *floor, sc.clone()).unwrap();
        }
        for (n, (mut q, floor)) in queries.into_iter().enumerate() {
            q.node_id = 1000 + n;
            if let Some(c) = db.query(&q, floor, &cfg) {
                prop_assert_eq!(c.match_floor, floor);
                prop_assert_eq!(entries[c.match_id].1, floor);
            }
        }
    }
}
