use proptest::prelude::*;
use xslice_core::{
    action_to_allocation, slice_regret, total_regret, KpmRecord, RegretWeights, SliceRegret,
    SliceSpec,
};

fn record(slice: usize, tp: f64, delay: f64, bler: f64) -> KpmRecord {
    KpmRecord {
        throughput_mbps: tp,
        delay_ms: delay,
        bler,
        ..KpmRecord::idle(0, slice)
    }
}

fn arb_spec() -> impl Strategy<Value = SliceSpec> {
    (
        1.0..300.0f64,
        1.0..500.0f64,
        0.01..1.0f64,
        0.0..4.0f64,
        0.0..4.0f64,
        0.0..4.0f64,
    )
        .prop_map(|(p, t, z, a, b, c)| {
            SliceSpec::new(0, p, t, z, RegretWeights::new(a, b, c)).unwrap()
        })
}

fn arb_kpm() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0..400.0f64, 0.0..1000.0f64, 0.0..1.0f64)
}

fn regret_of(spec: &SliceSpec, kpms: &[(f64, f64, f64)]) -> f64 {
    let recs: Vec<KpmRecord> = kpms.iter().map(|&(p, d, z)| record(0, p, d, z)).collect();
    let r = slice_regret(spec, &recs);
    total_regret(std::slice::from_ref(spec), &[r]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn regret_is_nonnegative(spec in arb_spec(), kpms in prop::collection::vec(arb_kpm(), 0..12)) {
        let recs: Vec<KpmRecord> = kpms.iter().map(|&(p, d, z)| record(0, p, d, z)).collect();
        let r = slice_regret(&spec, &recs);
        prop_assert!(r.throughput >= 0.0 && r.delay >= 0.0 && r.reliability >= 0.0);
        prop_assert!(regret_of(&spec, &kpms) >= 0.0);
    }

    #[test]
    fn meeting_every_demand_gives_zero_regret(
        spec in arb_spec(),
        slack in prop::collection::vec((0.0..100.0f64, 0.0..1.0f64, 0.0..1.0f64), 0..12),
    ) {
        let kpms: Vec<(f64, f64, f64)> = slack
            .iter()
            .map(|&(extra, d, z)| (spec.throughput_mbps + extra, spec.delay_ms * d, spec.bler * z))
            .collect();
        prop_assert_eq!(regret_of(&spec, &kpms), 0.0);
    }

    #[test]
    fn regret_is_monotone(
        spec in arb_spec(),
        kpms in prop::collection::vec(arb_kpm(), 1..8),
        idx in any::<prop::sample::Index>(),
        dp in 0.0..100.0f64,
        dd in 0.0..500.0f64,
        dz in 0.0..0.5f64,
    ) {
        let i = idx.index(kpms.len());
        let base = regret_of(&spec, &kpms);

        let mut less_tp = kpms.clone();
        less_tp[i].0 = (less_tp[i].0 - dp).max(0.0);
        prop_assert!(regret_of(&spec, &less_tp) >= base);

        let mut more_delay = kpms.clone();
        more_delay[i].1 += dd;
        prop_assert!(regret_of(&spec, &more_delay) >= base);

        let mut more_bler = kpms.clone();
        more_bler[i].2 = (more_bler[i].2 + dz).min(1.0);
        prop_assert!(regret_of(&spec, &more_bler) >= base);
    }

    #[test]
    fn weights_are_homogeneous(
        specs in prop::collection::vec(arb_spec(), 1..5),
        triples in prop::collection::vec((0.0..5.0f64, 0.0..5.0f64, 0.0..5.0f64), 5),
        exp in -4i32..5,
        c in 0.01..10.0f64,
    ) {
        let per: Vec<SliceRegret> = triples[..specs.len()]
            .iter()
            .map(|&(a, b, c)| SliceRegret { throughput: a, delay: b, reliability: c })
            .collect();
        let base = total_regret(&specs, &per).unwrap();
        let scale = |f: f64| -> Vec<SliceSpec> {
            specs.iter().cloned().map(|mut s| { s.weights = s.weights.scaled(f); s }).collect()
        };
        // Powers of two scale exactly in binary floating point.
        let p2 = 2f64.powi(exp);
        prop_assert_eq!(total_regret(&scale(p2), &per).unwrap(), p2 * base);
        let scaled = total_regret(&scale(c), &per).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-12 * (1.0 + (c * base).abs()));
    }

    #[test]
    fn allocations_are_feasible(
        ratios in prop::collection::vec(0.0..=1.0f64, 1..6),
        n_rb in 6u32..300,
        min_prb in 0u32..5,
    ) {
        prop_assume!(u64::from(min_prb) * ratios.len() as u64 <= u64::from(n_rb));
        let a = action_to_allocation(&ratios, n_rb, min_prb).unwrap();
        prop_assert_eq!(a.grants.len(), ratios.len());
        prop_assert!(a.total() <= n_rb);
        prop_assert!(a.validate(n_rb).is_ok());
        let mut next = 0;
        for g in &a.grants {
            prop_assert!(g.num_prb >= min_prb);
            prop_assert_eq!(g.start_prb, next);
            next += g.num_prb;
        }
    }
}
