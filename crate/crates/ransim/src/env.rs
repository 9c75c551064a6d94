//! The round-driven RAN state machine.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use xslice_core::{Allocation, KpmRecord, KpmReport, SchedulerKind, SliceSpec};

use crate::error::RanError;
use crate::kpm::{compute_kpm, synthetic_phr_db};
use crate::link::{prb_capacity_bits, step_channel, ChannelState, LinkModel};
use crate::queue::PacketQueue;
use crate::scenario::{Scenario, ScenarioEvent};
use crate::scheduler::{assign_prbs, pf_update, Candidate, SchedParams};
use crate::traffic::{bytes_per_round, DemandProfile};

pub use crate::kpm::RoundService;

/// Cumulative byte accounting of one session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionCounters {
    pub offered_bytes: u64,
    pub delivered_bytes: u64,
    /// Bytes discarded by the discard timer or when the session departed
    /// with a backlog.
    pub dropped_bytes: u64,
    /// Transmission attempts lost to block errors (these bytes were requeued).
    pub failed_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct SessionState {
    pub session_id: u32,
    pub slice_id: usize,
    pub queue: PacketQueue,
    pub demand: DemandProfile,
    pub demand_override: Option<f64>,
    pub channel: ChannelState,
    pub active: bool,
    pub arrival: u64,
    pub departure: Option<u64>,
    pub pf_avg_bits: f64,
    pub counters: SessionCounters,
    pub last_service: RoundService,
    /// Offered rate of the most recent round, Mbps.
    pub last_offered_mbps: f64,
    carry_bytes: f64,
    channel_rng: ChaCha8Rng,
    traffic_rng: ChaCha8Rng,
    error_rng: ChaCha8Rng,
}

impl SessionState {
    fn is_live_at(&self, round: u64) -> bool {
        self.arrival <= round && self.departure.is_none_or(|d| round < d)
    }
}

/// Independent random streams per session and purpose, so neither a new
/// session nor a different allocation perturbs another session's channel or
/// traffic.
fn stream(seed: u64, session_id: u32, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(session_id) << 2) | purpose);
    rng
}

/// Multi-slice MAC environment. One [`ran_round`](RanEnv::ran_round) call
/// advances the simulation by one query round.
#[derive(Debug, Clone)]
pub struct RanEnv {
    scenario: Scenario,
    sessions: Vec<SessionState>,
    /// Departure and demand-step events not yet applied, in round order.
    pending: Vec<ScenarioEvent>,
    rr_cursors: Vec<usize>,
    round: u64,
}

impl RanEnv {
    pub fn new(scenario: Scenario) -> Result<Self, RanError> {
        scenario.validate()?;
        let mut sessions = Vec::new();
        for (i, t) in scenario.all_sessions().into_iter().enumerate() {
            let id = i as u32;
            sessions.push(SessionState {
                session_id: id,
                slice_id: t.slice,
                queue: PacketQueue::new(),
                demand: scenario.demand_profile(&t)?,
                demand_override: None,
                channel: ChannelState::new(t.mean_snr_db, t.correlation, &scenario.link),
                active: false,
                arrival: t.arrival,
                departure: t.departure,
                pf_avg_bits: 0.0,
                counters: SessionCounters::default(),
                last_service: RoundService::default(),
                last_offered_mbps: 0.0,
                carry_bytes: 0.0,
                channel_rng: stream(scenario.seed, id, 0),
                traffic_rng: stream(scenario.seed, id, 1),
                error_rng: stream(scenario.seed, id, 2),
            });
        }
        let pending = scenario
            .sorted_events()
            .into_iter()
            .filter(|e| !matches!(e, ScenarioEvent::SessionArrival { .. }))
            .cloned()
            .collect();
        let mut env = Self {
            rr_cursors: vec![0; scenario.slices.len() + 1],
            scenario,
            sessions,
            pending,
            round: 0,
        };
        env.refresh_activity(0);
        Ok(env)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn slices(&self) -> &[SliceSpec] {
        &self.scenario.slices
    }

    pub fn n_rb(&self) -> u32 {
        self.scenario.n_rb
    }

    pub fn link(&self) -> &LinkModel {
        &self.scenario.link
    }

    /// Index of the next round to be played.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn sessions(&self) -> &[SessionState] {
        &self.sessions
    }

    pub fn active_sessions(&self) -> impl Iterator<Item = &SessionState> {
        self.sessions.iter().filter(|s| s.active)
    }

    /// Bytes one PRB carries for `session` at its current channel.
    pub fn prb_bytes(&self, session: &SessionState) -> u64 {
        (prb_capacity_bits(
            session.channel.efficiency(),
            self.scenario.round_ms,
            &self.scenario.link,
        ) / 8.0)
            .floor() as u64
    }

    /// Report describing the sessions before any round is played.
    pub fn initial_report(&self) -> KpmReport {
        let slots = self.scenario.link.slots_per_round(self.scenario.round_ms);
        let records = self
            .active_sessions()
            .map(|s| KpmRecord {
                pusch_snr_db: s.channel.snr_db,
                phr_db: synthetic_phr_db(s.channel.snr_db),
                mcs: s.channel.mcs,
                current_tbs: (self.prb_bytes(s) as f64 / slots).floor() as u32,
                ..KpmRecord::idle(s.session_id, s.slice_id)
            })
            .collect();
        KpmReport {
            round: self.round,
            records,
        }
    }

    fn refresh_activity(&mut self, round: u64) {
        for s in &mut self.sessions {
            let live = s.is_live_at(round);
            if s.active && !live {
                s.counters.dropped_bytes += s.queue.clear();
            }
            s.active = live;
        }
    }

    fn apply_events(&mut self, round: u64) {
        while self.pending.first().is_some_and(|e| e.round() <= round) {
            match self.pending.remove(0) {
                ScenarioEvent::SessionDeparture { session, round } => {
                    let s = &mut self.sessions[session as usize];
                    s.departure = Some(s.departure.map_or(round, |d| d.min(round)));
                }
                ScenarioEvent::DemandStep { session, mbps, .. } => {
                    self.sessions[session as usize].demand_override = Some(mbps);
                }
                ScenarioEvent::SessionArrival { .. } => {}
            }
        }
    }

    fn check_allocation(&self, alloc: &Allocation) -> Result<(), RanError> {
        alloc
            .validate(self.scenario.n_rb)
            .map_err(|e| RanError::Protocol(e.to_string()))?;
        let k = self.scenario.slices.len();
        if !alloc.pooled && alloc.grants.len() != k {
            return Err(RanError::Protocol(format!(
                "allocation carries {} grants for {k} slices",
                alloc.grants.len()
            )));
        }
        Ok(())
    }

    /// Plays one round under `alloc` and returns the KPM report of every
    /// session active during it.
    pub fn ran_round(&mut self, alloc: &Allocation) -> Result<KpmReport, RanError> {
        self.check_allocation(alloc)?;
        let round = self.round;
        let round_ms = self.scenario.round_ms;
        let link = self.scenario.link;
        let slots = link.slots_per_round(round_ms);

        self.apply_events(round);
        self.refresh_activity(round);

        for s in self.sessions.iter_mut().filter(|s| s.active) {
            s.channel = step_channel(&s.channel, &link, &mut s.channel_rng);
            let mbps = match s.demand_override {
                Some(r) => r,
                None => s.demand.rate_at(round, &mut s.traffic_rng),
            };
            s.last_offered_mbps = mbps;
            let exact = bytes_per_round(mbps, round_ms) + s.carry_bytes;
            let whole = exact.floor();
            s.carry_bytes = exact - whole;
            s.queue.push(whole as u64, round);
            s.counters.offered_bytes += whole as u64;
        }

        if let Some(discard_ms) = self.scenario.discard_ms {
            // A packet from round a has waited (round - a) rounds by now.
            let max_age = (discard_ms / round_ms).floor() as u64;
            if let Some(cutoff) = round.checked_sub(max_age.saturating_sub(1)) {
                for s in self.sessions.iter_mut().filter(|s| s.active) {
                    s.counters.dropped_bytes += s.queue.drop_arrived_before(cutoff);
                }
            }
        }

        // (session indices, PRBs, policy, round-robin cursor slot)
        let groups: Vec<(Vec<usize>, u32, SchedulerKind, usize)> = if alloc.pooled {
            let members = (0..self.sessions.len())
                .filter(|&i| self.sessions[i].active)
                .collect();
            let k = self.scenario.slices.len();
            vec![(
                members,
                alloc.grants[0].num_prb,
                SchedulerKind::ProportionalFair,
                k,
            )]
        } else {
            self.scenario
                .slices
                .iter()
                .zip(&alloc.grants)
                .map(|(spec, g)| {
                    let members = (0..self.sessions.len())
                        .filter(|&i| {
                            self.sessions[i].active && self.sessions[i].slice_id == spec.id
                        })
                        .collect();
                    (members, g.num_prb, spec.scheduler, spec.id)
                })
                .collect()
        };

        let params = SchedParams {
            round_ms,
            pf_beta: self.scenario.pf_beta,
        };
        for (members, n_prb, policy, cursor_slot) in groups {
            let prb_bytes: Vec<u64> = members
                .iter()
                .map(|&i| self.prb_bytes(&self.sessions[i]))
                .collect();
            let prbs = {
                let cands: Vec<Candidate<'_>> = members
                    .iter()
                    .zip(&prb_bytes)
                    .map(|(&i, &pb)| {
                        let s = &self.sessions[i];
                        Candidate {
                            prb_bytes: pb,
                            queue: &s.queue,
                            pf_avg_bits: s.pf_avg_bits,
                            delay_budget_ms: self.scenario.slices[s.slice_id].delay_ms,
                        }
                    })
                    .collect();
                assign_prbs(
                    policy,
                    &cands,
                    n_prb,
                    &mut self.rr_cursors[cursor_slot],
                    params,
                )
            };
            for ((&i, &pb), &n) in members.iter().zip(&prb_bytes).zip(&prbs) {
                let s = &mut self.sessions[i];
                let svc = transmit(s, n, pb, slots);
                s.pf_avg_bits = pf_update(
                    s.pf_avg_bits,
                    svc.delivered_bytes as f64 * 8.0,
                    params.pf_beta,
                );
                s.counters.delivered_bytes += svc.delivered_bytes;
                s.counters.failed_bytes += svc.failed_bytes;
                s.last_service = svc;
            }
        }

        let records = self
            .sessions
            .iter()
            .filter(|s| s.active)
            .map(|s| {
                compute_kpm(
                    s.session_id,
                    s.slice_id,
                    &s.channel,
                    &s.last_service,
                    &s.queue,
                    round,
                    round_ms,
                    slots,
                )
            })
            .collect();
        self.round += 1;
        Ok(KpmReport { round, records })
    }
}

/// Sends up to `prbs` PRBs worth of the session's queue; each PRB-slot is a
/// transport block that fails independently with the channel's BLER.
fn transmit(s: &mut SessionState, prbs: u32, prb_bytes: u64, slots: f64) -> RoundService {
    let capacity = u64::from(prbs) * prb_bytes;
    let attempted = s.queue.bytes().min(capacity);
    let mut svc = RoundService {
        scheduled_rbs: prbs,
        prb_bytes,
        capacity_bytes: capacity,
        attempted_bytes: attempted,
        ..RoundService::default()
    };
    if attempted == 0 {
        return svc;
    }
    svc.prbs_used = attempted.div_ceil(prb_bytes) as u32;
    let block_bytes = prb_bytes as f64 / slots;
    let blocks = (attempted as f64 / block_bytes).ceil().max(1.0) as u64;
    let p = s.channel.bler_prob.clamp(0.0, 1.0);
    let failed_blocks = Binomial::new(blocks, p)
        .expect("valid binomial parameters")
        .sample(&mut s.error_rng);
    let failed = (attempted as u128 * u128::from(failed_blocks) / u128::from(blocks)) as u64;
    svc.attempted_blocks = blocks;
    svc.failed_blocks = failed_blocks;
    svc.failed_bytes = failed;
    svc.delivered_bytes = attempted - failed;
    svc.delivered = s.queue.pop_bytes(svc.delivered_bytes);
    svc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{DemandSpec, SessionTemplate, TrafficClass};
    use xslice_core::RegretWeights;

    fn scenario(sessions: Vec<SessionTemplate>) -> Scenario {
        Scenario {
            name: "test".into(),
            seed: 11,
            rounds: 100,
            round_ms: 100.0,
            n_rb: 50,
            traffic_class: TrafficClass::Custom,
            demand_hold_rounds: 100.0,
            pf_beta: 0.1,
            discard_ms: None,
            link: LinkModel {
                noise_std_db: 0.0,
                ..LinkModel::default()
            },
            slices: vec![
                SliceSpec::new(0, 10.0, 50.0, 0.1, RegretWeights::default()).unwrap(),
                SliceSpec::new(1, 10.0, 50.0, 0.1, RegretWeights::default()).unwrap(),
            ],
            sessions,
            events: vec![],
        }
    }

    #[test]
    fn zero_traffic_reports_all_zero() {
        let t = SessionTemplate::new(0, 20.0, DemandSpec::Constant { mbps: 0.0 });
        let mut env =
            RanEnv::new(scenario(vec![t.clone(), SessionTemplate { slice: 1, ..t }])).unwrap();
        for _ in 0..5 {
            let rep = env.ran_round(&Allocation::equal_split(2, 50)).unwrap();
            for r in &rep.records {
                assert_eq!((r.throughput_mbps, r.delay_ms, r.bler), (0.0, 0.0, 0.0));
            }
        }
    }

    #[test]
    fn protocol_errors() {
        let t = SessionTemplate::new(0, 20.0, DemandSpec::Constant { mbps: 1.0 });
        let mut env = RanEnv::new(scenario(vec![t])).unwrap();
        assert!(matches!(
            env.ran_round(&Allocation::from_counts(&[10, 10, 10])),
            Err(RanError::Protocol(_))
        ));
        assert!(matches!(
            env.ran_round(&Allocation::from_counts(&[40, 40])),
            Err(RanError::Protocol(_))
        ));
        assert_eq!(env.round(), 0);
    }

    #[test]
    fn departure_clears_queue_and_activity() {
        let mut t = SessionTemplate::new(0, -20.0, DemandSpec::Constant { mbps: 5.0 });
        t.departure = Some(3);
        let mut env = RanEnv::new(scenario(vec![t])).unwrap();
        let alloc = Allocation::equal_split(2, 50);
        for _ in 0..3 {
            assert_eq!(env.ran_round(&alloc).unwrap().records.len(), 1);
        }
        assert_eq!(env.ran_round(&alloc).unwrap().records.len(), 0);
        let s = &env.sessions()[0];
        assert!(s.queue.is_empty());
        assert_eq!(s.counters.dropped_bytes, s.counters.offered_bytes);
    }
}
