use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xslice_core::{action_to_allocation, Allocation, RegretWeights, SchedulerKind, SliceSpec};
use xslice_ransim::{
    DemandSpec, LinkModel, RanEnv, Scenario, ScenarioEvent, SessionTemplate, TrafficClass,
};

fn slice(id: usize, sched: SchedulerKind) -> SliceSpec {
    SliceSpec::new(id, 50.0, 100.0, 0.2, RegretWeights::default())
        .unwrap()
        .with_scheduler(sched)
}

fn mixed_scenario(seed: u64) -> Scenario {
    let mut sessions = Vec::new();
    for i in 0..7 {
        sessions.push(SessionTemplate::new(
            i % 3,
            8.0 + 3.0 * i as f64,
            DemandSpec::Class,
        ));
    }
    let mut late = SessionTemplate::new(1, 18.0, DemandSpec::Constant { mbps: 40.0 });
    late.departure = Some(60);
    Scenario {
        name: "mixed".into(),
        seed,
        rounds: 80,
        round_ms: 100.0,
        n_rb: 106,
        traffic_class: TrafficClass::Medium,
        demand_hold_rounds: 10.0,
        pf_beta: 0.1,
        discard_ms: None,
        link: LinkModel::default(),
        slices: vec![
            slice(0, SchedulerKind::ProportionalFair),
            slice(1, SchedulerKind::RoundRobin),
            slice(2, SchedulerKind::EarliestDeadlineFirst),
        ],
        sessions,
        events: vec![
            ScenarioEvent::SessionArrival {
                round: 20,
                session: late,
            },
            ScenarioEvent::SessionDeparture {
                round: 50,
                session: 2,
            },
            ScenarioEvent::DemandStep {
                round: 30,
                session: 0,
                mbps: 5.0,
            },
        ],
    }
}

fn random_allocation(rng: &mut impl Rng, k: usize, n_rb: u32) -> Allocation {
    let ratios: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
    action_to_allocation(&ratios, n_rb, 1).unwrap()
}

#[test]
fn invariants_hold_every_round() {
    let scenario = mixed_scenario(3);
    let mut env = RanEnv::new(scenario.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..scenario.rounds {
        let alloc = random_allocation(&mut rng, 3, scenario.n_rb);
        let report = env.ran_round(&alloc).unwrap();
        let counts = alloc.counts();
        for s in env.sessions() {
            // conservation
            let c = s.counters;
            assert_eq!(
                c.offered_bytes,
                c.delivered_bytes + s.queue.bytes() + c.dropped_bytes
            );
            if !s.active {
                assert!(s.queue.is_empty());
                continue;
            }
            // capacity bound
            let svc = &s.last_service;
            assert!(svc.delivered_bytes <= svc.capacity_bytes);
            assert_eq!(
                svc.capacity_bytes,
                u64::from(svc.scheduled_rbs) * svc.prb_bytes
            );
            // FIFO ages
            let arrivals: Vec<u64> = s.queue.packets().map(|p| p.arrival_round).collect();
            assert!(arrivals.windows(2).all(|w| w[0] <= w[1]));
        }
        // work conservation and grant accounting per slice
        for k in 0..3 {
            let members: Vec<_> = env.active_sessions().filter(|s| s.slice_id == k).collect();
            let scheduled: u32 = members.iter().map(|s| s.last_service.scheduled_rbs).sum();
            let had_backlog = members.iter().any(|s| s.last_service.attempted_bytes > 0);
            if had_backlog {
                assert_eq!(scheduled, counts[k], "slice {k} idled PRBs with backlog");
            } else {
                assert!(scheduled <= counts[k]);
            }
        }
        for rec in &report.records {
            assert!(rec.is_well_formed(), "{rec:?}");
        }
    }
}

#[test]
fn identical_inputs_give_identical_reports() {
    let run = || {
        let scenario = mixed_scenario(17);
        let mut env = RanEnv::new(scenario.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        (0..scenario.rounds)
            .map(|_| {
                let alloc = random_allocation(&mut rng, 3, scenario.n_rb);
                env.ran_round(&alloc).unwrap()
            })
            .collect::<Vec<_>>()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let bits = |v: &[xslice_core::KpmReport]| -> Vec<u64> {
        v.iter()
            .flat_map(|r| r.records.iter())
            .flat_map(|r| {
                [
                    r.throughput_mbps.to_bits(),
                    r.delay_ms.to_bits(),
                    r.bler.to_bits(),
                ]
            })
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn arriving_session_does_not_perturb_others() {
    let base = mixed_scenario(8);
    let mut quiet = base.clone();
    quiet
        .events
        .retain(|e| !matches!(e, ScenarioEvent::SessionArrival { .. }));
    let mut a = RanEnv::new(base).unwrap();
    let mut b = RanEnv::new(quiet).unwrap();
    let alloc = Allocation::equal_split(3, 106);
    for _ in 0..20 {
        let ra = a.ran_round(&alloc).unwrap();
        let rb = b.ran_round(&alloc).unwrap();
        assert_eq!(ra, rb);
    }
    // Channels of pre-existing sessions keep evolving identically afterwards.
    for _ in 0..20 {
        a.ran_round(&alloc).unwrap();
        b.ran_round(&alloc).unwrap();
        for (sa, sb) in a.sessions().iter().zip(b.sessions()) {
            assert_eq!(sa.channel, sb.channel);
        }
    }
}

fn single_session(mean_snr_db: f64, mbps: f64, n_rb: u32) -> Scenario {
    Scenario {
        name: "single".into(),
        seed: 1,
        rounds: 50,
        round_ms: 100.0,
        n_rb,
        traffic_class: TrafficClass::Custom,
        demand_hold_rounds: 100.0,
        pf_beta: 0.1,
        discard_ms: None,
        link: LinkModel {
            noise_std_db: 0.0,
            ..LinkModel::default()
        },
        slices: vec![slice(0, SchedulerKind::ProportionalFair)],
        sessions: vec![SessionTemplate::new(
            0,
            mean_snr_db,
            DemandSpec::Constant { mbps },
        )],
        events: vec![],
    }
}

#[test]
fn throughput_converges_to_offered_rate_within_two_rounds() {
    // 100 Mbps is 1.25 MB per round; 106 PRBs at CQI 15 carry ~1.49 MB.
    // Block errors disabled so the drain is exact.
    let mut scenario = single_session(40.0, 100.0, 106);
    scenario.link.bler_offset_db = -100.0;
    let mut env = RanEnv::new(scenario).unwrap();
    let alloc = Allocation::from_counts(&[106]);
    let reports: Vec<_> = (0..10).map(|_| env.ran_round(&alloc).unwrap()).collect();
    for rep in &reports[2..] {
        let r = &rep.records[0];
        assert!((r.throughput_mbps - 100.0).abs() < 1e-9, "{r:?}");
        assert!(r.delay_ms <= 100.0);
    }
}

#[test]
fn steady_delay_stays_within_one_round_under_capacity() {
    let mut scenario = single_session(25.0, 60.0, 106);
    scenario.link = LinkModel::default();
    let mut env = RanEnv::new(scenario).unwrap();
    let alloc = Allocation::from_counts(&[106]);
    for round in 0..200 {
        let rep = env.ran_round(&alloc).unwrap();
        if round >= 10 {
            assert!(
                rep.records[0].delay_ms <= 100.0,
                "round {round}: {:?}",
                rep.records[0]
            );
        }
    }
}

#[test]
fn starved_session_reports_head_of_line_age() {
    // CQI 0 never carries anything, so the backlog ages one round per round.
    let mut env = RanEnv::new(single_session(-20.0, 10.0, 10)).unwrap();
    let alloc = Allocation::from_counts(&[10]);
    for round in 0..15u64 {
        let rep = env.ran_round(&alloc).unwrap();
        let expected = ((round + 1) as f64 * 100.0).min(1000.0);
        assert_eq!(rep.records[0].delay_ms, expected);
        assert_eq!(rep.records[0].throughput_mbps, 0.0);
    }
}

#[test]
fn discard_timer_bounds_backlog_age() {
    let mut scenario = single_session(-20.0, 10.0, 10);
    scenario.discard_ms = Some(300.0);
    let mut env = RanEnv::new(scenario).unwrap();
    let alloc = Allocation::from_counts(&[10]);
    // 10 Mbps for 100 ms
    let per_round = 125_000;
    for round in 0..15u64 {
        let rep = env.ran_round(&alloc).unwrap();
        let expected = ((round + 1) as f64 * 100.0).min(300.0);
        assert_eq!(rep.records[0].delay_ms, expected);
        let s = &env.sessions()[0];
        let kept = (round + 1).min(3);
        assert_eq!(s.queue.bytes(), kept * per_round);
        assert_eq!(s.counters.dropped_bytes, (round + 1 - kept) * per_round);
        assert_eq!(
            s.counters.offered_bytes,
            s.counters.delivered_bytes + s.queue.bytes() + s.counters.dropped_bytes
        );
    }
}

#[test]
fn empty_slice_leaves_grant_idle() {
    let mut scenario = single_session(20.0, 10.0, 20);
    scenario
        .slices
        .push(slice(1, SchedulerKind::ProportionalFair));
    let mut env = RanEnv::new(scenario).unwrap();
    let rep = env.ran_round(&Allocation::from_counts(&[10, 10])).unwrap();
    assert_eq!(rep.records.len(), 1);
    assert_eq!(rep.records[0].slice_id, 0);
}

#[test]
fn unknown_slice_in_allocation_is_a_protocol_error() {
    let mut env = RanEnv::new(single_session(20.0, 10.0, 20)).unwrap();
    let err = env
        .ran_round(&Allocation::from_counts(&[5, 5]))
        .unwrap_err();
    assert!(matches!(err, xslice_ransim::RanError::Protocol(_)), "{err}");
}

#[test]
fn pooled_allocation_schedules_across_slices() {
    let mut scenario = mixed_scenario(4);
    scenario.events.clear();
    let mut env = RanEnv::new(scenario).unwrap();
    let rep = env.ran_round(&Allocation::pooled(106)).unwrap();
    let total: u32 = rep.records.iter().map(|r| r.scheduled_rbs).sum();
    assert_eq!(total, 106);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conservation_under_random_allocations(seed in 0u64..1000, alloc_seed in 0u64..1000) {
        let scenario = mixed_scenario(seed);
        let mut env = RanEnv::new(scenario.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(alloc_seed);
        for _ in 0..scenario.rounds {
            let alloc = random_allocation(&mut rng, 3, scenario.n_rb);
            env.ran_round(&alloc).unwrap();
            for s in env.sessions() {
                let c = s.counters;
                prop_assert_eq!(c.offered_bytes, c.delivered_bytes + s.queue.bytes() + c.dropped_bytes);
                prop_assert!(s.last_service.delivered_bytes <= s.last_service.capacity_bytes);
            }
        }
    }
}
