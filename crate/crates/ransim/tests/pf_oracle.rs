//! Step-through oracle of the proportional-fair scheduler on a frozen,
//! error-free channel.

use xslice_core::{Allocation, RegretWeights, SchedulerKind, SliceSpec};
use xslice_ransim::{DemandSpec, LinkModel, RanEnv, Scenario, SessionTemplate, TrafficClass};

const EFF: [f64; 16] = [
    0.0, 0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223,
    3.9023, 4.5234, 5.1152, 5.5547,
];

struct Oracle {
    prb_bytes: Vec<f64>,
    queue: Vec<f64>,
    avg: Vec<f64>,
    offered: Vec<f64>,
    beta: f64,
}

impl Oracle {
    fn round(&mut self, grant: u32) -> Vec<u32> {
        let n = self.queue.len();
        for i in 0..n {
            self.queue[i] += self.offered[i];
        }
        let mut prbs = vec![0u32; n];
        for _ in 0..grant {
            let held = |i: usize, prbs: &[u32]| prbs[i] as f64 * self.prb_bytes[i];
            let mut eligible: Vec<usize> =
                (0..n).filter(|&i| self.queue[i] > held(i, &prbs)).collect();
            if eligible.is_empty() {
                eligible = (0..n).filter(|&i| self.queue[i] > 0.0).collect();
            }
            let mut best: Option<(usize, f64)> = None;
            for &i in &eligible {
                let served_bits = held(i, &prbs) * 8.0;
                let denom = ((1.0 - self.beta) * self.avg[i] + self.beta * served_bits).max(1.0);
                let metric = self.prb_bytes[i] * 8.0 / denom;
                if best.is_none_or(|(_, m)| metric > m) {
                    best = Some((i, metric));
                }
            }
            match best {
                Some((i, _)) => prbs[i] += 1,
                None => break,
            }
        }
        for i in 0..n {
            let sent = self.queue[i].min(prbs[i] as f64 * self.prb_bytes[i]);
            self.queue[i] -= sent;
            self.avg[i] = (1.0 - self.beta) * self.avg[i] + self.beta * sent * 8.0;
        }
        prbs
    }
}

#[test]
fn pf_matches_step_through_oracle() {
    let snrs = [10.0, 20.0, 30.0];
    let rates = [20.0, 45.0, 70.0];
    let scenario = Scenario {
        name: "pf".into(),
        seed: 2,
        rounds: 10,
        round_ms: 100.0,
        n_rb: 60,
        traffic_class: TrafficClass::Custom,
        demand_hold_rounds: 100.0,
        pf_beta: 0.1,
        discard_ms: None,
        link: LinkModel {
            noise_std_db: 0.0,
            bler_offset_db: -100.0,
            ..LinkModel::default()
        },
        slices: vec![
            SliceSpec::new(0, 10.0, 100.0, 0.1, RegretWeights::default())
                .unwrap()
                .with_scheduler(SchedulerKind::ProportionalFair),
        ],
        sessions: snrs
            .iter()
            .zip(rates)
            .map(|(&snr, mbps)| SessionTemplate::new(0, snr, DemandSpec::Constant { mbps }))
            .collect(),
        events: vec![],
    };
    let mut env = RanEnv::new(scenario).unwrap();

    let cqi = |snr: f64| (((snr + 6.0) / 2.2) as usize).min(15);
    let mut oracle = Oracle {
        prb_bytes: snrs
            .iter()
            .map(|&s| (EFF[cqi(s)] * 12.0 * 14.0 * 200.0 * 0.7 * 0.86 / 8.0).floor())
            .collect(),
        queue: vec![0.0; 3],
        avg: vec![0.0; 3],
        offered: rates.iter().map(|r| r * 100.0 * 125.0).collect(),
        beta: 0.1,
    };

    let grant = 60;
    let mut saw_split = false;
    for round in 0..10 {
        let expected = oracle.round(grant);
        let report = env.ran_round(&Allocation::from_counts(&[grant])).unwrap();
        let got: Vec<u32> = report.records.iter().map(|r| r.scheduled_rbs).collect();
        assert_eq!(got, expected, "round {round}");
        saw_split |= expected.iter().filter(|&&p| p > 0).count() == 3;
    }
    assert!(
        saw_split,
        "scenario should exercise contention between all three sessions"
    );
}
