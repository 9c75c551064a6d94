//! The online slicing agent: encodes each report, samples an allocation,
//! turns the next report into a reward and trains on full rollouts.

use std::path::Path;
use std::sync::Arc;
use std::thread::JoinHandle;

use crossbeam::channel::{unbounded, Receiver, Sender};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use xslice_core::{
    action_to_allocation, evaluate_round_with, Allocation, KpmReport, RewardBasis, SliceSpec,
    SlicingPolicy,
};
use xslice_gcn::{build_graph, FeatureBounds, SliceGraph, DEFAULT_N_MAX};

use crate::buffer::{RolloutBuffer, Transition};
use crate::checkpoint::save_checkpoint;
use crate::error::PpoError;
use crate::penalty::{penalty_triggered, PenaltyConfig, PenaltyMode};
use crate::policy::{sample_action, Action, PolicyConfig, PolicyParams};
use crate::snapshot::{Snapshot, SnapshotCell};
use crate::train::{Learner, PpoConfig, UpdateStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrainingMode {
    /// Updates run on the caller's thread between decisions; fully
    /// deterministic.
    #[default]
    Inline,
    /// Updates run on a trainer thread and are picked up when published.
    Background,
    /// No learning after warm-up.
    Frozen,
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub specs: Vec<SliceSpec>,
    pub n_rb: u32,
    /// PRB floor per slice when mapping actions to allocations.
    pub min_prb: u32,
    pub n_max: usize,
    pub bounds: FeatureBounds,
    pub utilization_c: f64,
    pub r_max: f64,
    pub reward_basis: RewardBasis,
    pub policy: PolicyConfig,
    pub ppo: PpoConfig,
    pub penalty: PenaltyConfig,
    pub warmup_steps: usize,
    pub warmup_sigma: f64,
    pub training: TrainingMode,
    pub seed: u64,
}

impl AgentConfig {
    pub fn new(specs: Vec<SliceSpec>, n_rb: u32, seed: u64) -> Self {
        let k = specs.len();
        Self {
            bounds: FeatureBounds::for_band(n_rb, 500.0, 512.0, 250.0),
            specs,
            n_rb,
            min_prb: 1,
            n_max: DEFAULT_N_MAX,
            utilization_c: 0.0,
            r_max: k as f64,
            reward_basis: RewardBasis::SessionMean,
            policy: PolicyConfig::new(k, seed),
            ppo: PpoConfig::default(),
            penalty: PenaltyConfig::default(),
            warmup_steps: 500,
            warmup_sigma: 0.2,
            training: TrainingMode::Inline,
            seed,
        }
    }
}

/// What the agent learned from one report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub round: u64,
    /// Reward stored for training (the penalty value on penalized rounds).
    pub reward: f64,
    pub normalized_reward: f64,
    pub regret: f64,
    pub utilization: f64,
    pub penalty: bool,
    pub sigma_mean: f64,
    pub mu_mean: f64,
    pub policy_loss: Option<f64>,
    pub value_loss: Option<f64>,
    pub clip_fraction: Option<f64>,
    pub update_failed: bool,
}

struct Pending {
    graph: SliceGraph,
    state: Vec<f64>,
    action: Action,
    value: f64,
    allocation: Allocation,
}

struct Job {
    transitions: Vec<Transition>,
    bootstrap: f64,
}

struct Background {
    jobs: Option<Sender<Job>>,
    results: Receiver<Result<UpdateStats, PpoError>>,
    in_flight: usize,
    handle: Option<JoinHandle<()>>,
}

pub struct XSliceAgent {
    cfg: AgentConfig,
    snapshots: Arc<SnapshotCell>,
    learner: Option<Learner>,
    background: Option<Background>,
    buffer: RolloutBuffer,
    rng: ChaCha8Rng,
    pending: Option<Pending>,
    queued_update: Option<Job>,
    log: Vec<StepRecord>,
    updates: usize,
    failed_updates: usize,
}

impl XSliceAgent {
    /// Builds the networks and runs the warm-up.
    pub fn new(cfg: AgentConfig) -> Result<Self, PpoError> {
        // Validates the PRB floor up front.
        action_to_allocation(&vec![0.0; cfg.specs.len()], cfg.n_rb, cfg.min_prb)?;
        let mut learner = Learner::new(PolicyParams::new(&cfg.policy), cfg.ppo, cfg.seed ^ 0x5eed);
        learner.warmup(cfg.warmup_steps, cfg.n_max, cfg.warmup_sigma)?;
        Self::with_learner(cfg, learner)
    }

    /// Starts from existing parameters without warm-up.
    pub fn from_params(cfg: AgentConfig, params: PolicyParams) -> Result<Self, PpoError> {
        let learner = Learner::new(params, cfg.ppo, cfg.seed ^ 0x5eed);
        Self::with_learner(cfg, learner)
    }

    fn with_learner(cfg: AgentConfig, learner: Learner) -> Result<Self, PpoError> {
        let snapshots = Arc::new(SnapshotCell::new(learner.params.clone()));
        let (learner, background) = match cfg.training {
            TrainingMode::Background => (None, Some(spawn_trainer(learner, snapshots.clone()))),
            _ => (Some(learner), None),
        };
        Ok(Self {
            buffer: RolloutBuffer::new(cfg.ppo.rollout),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            snapshots,
            learner,
            background,
            pending: None,
            queued_update: None,
            log: Vec::new(),
            updates: 0,
            failed_updates: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshots.load()
    }

    pub fn snapshot_cell(&self) -> Arc<SnapshotCell> {
        self.snapshots.clone()
    }

    pub fn log(&self) -> &[StepRecord] {
        &self.log
    }

    pub fn updates(&self) -> (usize, usize) {
        (self.updates, self.failed_updates)
    }

    /// Encodes a report, dropping sessions beyond the graph capacity.
    pub fn encode(&self, report: &KpmReport) -> Result<SliceGraph, PpoError> {
        if report.records.len() > self.cfg.n_max {
            let trimmed = KpmReport {
                round: report.round,
                records: report.records[..self.cfg.n_max].to_vec(),
            };
            return Ok(build_graph(
                &trimmed,
                &self.cfg.specs,
                self.cfg.n_max,
                &self.cfg.bounds,
            )?);
        }
        Ok(build_graph(
            report,
            &self.cfg.specs,
            self.cfg.n_max,
            &self.cfg.bounds,
        )?)
    }

    fn run_queued_update(&mut self) {
        let Some(job) = self.queued_update.take() else {
            return;
        };
        let learner = self.learner.as_mut().expect("inline learner");
        let result = learner.update(&job.transitions, job.bootstrap);
        if result.is_ok() {
            self.snapshots.publish(learner.params.clone());
        }
        self.record_update(result);
    }

    fn record_update(&mut self, result: Result<UpdateStats, PpoError>) {
        let entry = self.log.last_mut();
        match result {
            Ok(stats) => {
                self.updates += 1;
                if let Some(e) = entry {
                    e.policy_loss = Some(stats.policy_loss);
                    e.value_loss = Some(stats.value_loss);
                    e.clip_fraction = Some(stats.clip_fraction);
                }
            }
            Err(_) => {
                self.failed_updates += 1;
                if let Some(e) = entry {
                    e.update_failed = true;
                }
            }
        }
    }

    fn poll_background(&mut self, block: bool) {
        let mut results = Vec::new();
        if let Some(bg) = &mut self.background {
            while bg.in_flight > 0 {
                let r = if block {
                    bg.results.recv().ok()
                } else {
                    bg.results.try_recv().ok()
                };
                match r {
                    Some(r) => {
                        bg.in_flight -= 1;
                        results.push(r);
                    }
                    None => break,
                }
            }
        }
        for r in results {
            self.record_update(r);
        }
    }

    /// Blocks until queued or in-flight training has finished.
    pub fn finish_training(&mut self) {
        self.run_queued_update();
        self.poll_background(true);
    }

    fn complete_transition(&mut self, report: &KpmReport, next_value: f64) -> Result<(), PpoError> {
        let Some(p) = self.pending.take() else {
            return Ok(());
        };
        let cfg = &self.cfg;
        let b = evaluate_round_with(
            &cfg.specs,
            report,
            &p.allocation,
            cfg.utilization_c,
            cfg.r_max,
            cfg.reward_basis,
        )?;
        let triggered = cfg.penalty.mode != PenaltyMode::Off
            && penalty_triggered(report, &p.allocation, cfg.penalty.min_rb_per_session);
        let reward = if triggered {
            cfg.penalty.value
        } else {
            b.normalized_reward
        };
        let snap = self.snapshots.load();
        let sigma = snap.params.sigma();
        self.log.push(StepRecord {
            round: report.round,
            reward,
            normalized_reward: b.normalized_reward,
            regret: b.total,
            utilization: b.utilization,
            penalty: triggered,
            sigma_mean: sigma.iter().sum::<f64>() / sigma.len() as f64,
            mu_mean: 0.0,
            policy_loss: None,
            value_loss: None,
            clip_fraction: None,
            update_failed: false,
        });
        if self.cfg.training == TrainingMode::Frozen {
            return Ok(());
        }
        if !(triggered && cfg.penalty.mode == PenaltyMode::Skip) {
            self.buffer.push(Transition {
                round: report.round,
                graph: p.graph,
                state: p.state,
                action: p.action,
                reward,
                value: p.value,
                penalty: triggered,
                actor_visible: !(triggered && cfg.penalty.mode == PenaltyMode::ActorMask),
            });
        }
        if self.buffer.is_full() {
            let job = Job {
                transitions: self.buffer.take(),
                bootstrap: next_value,
            };
            match &mut self.background {
                Some(bg) => {
                    if let Some(tx) = &bg.jobs {
                        if tx.send(job).is_ok() {
                            bg.in_flight += 1;
                        }
                    }
                }
                None => self.queued_update = Some(job),
            }
        }
        Ok(())
    }

    /// Full decision step. Errors only on malformed reports.
    pub fn step(&mut self, report: &KpmReport) -> Result<Allocation, PpoError> {
        self.run_queued_update();
        self.poll_background(false);
        let graph = self.encode(report)?;
        let snap = self.snapshots.load();
        let (out, _) = snap.params.forward(&graph);
        if out.mu.iter().chain(&out.sigma).any(|v| !v.is_finite()) || !out.value.is_finite() {
            return Err(PpoError::NumericalHealth("policy output"));
        }
        self.complete_transition(report, out.value)?;
        let action = sample_action(&out.mu, &out.sigma, &mut self.rng);
        let allocation = action_to_allocation(&action.clipped, self.cfg.n_rb, self.cfg.min_prb)?;
        if let Some(last) = self.log.last_mut() {
            if last.round == report.round {
                last.mu_mean = out.mu.iter().sum::<f64>() / out.mu.len() as f64;
            }
        }
        self.pending = Some(Pending {
            graph,
            state: out.state,
            action,
            value: out.value,
            allocation: allocation.clone(),
        });
        Ok(allocation)
    }

    /// Mean action of the current policy for `report`, without sampling.
    pub fn greedy(&self, report: &KpmReport) -> Result<Vec<f64>, PpoError> {
        let graph = self.encode(report)?;
        Ok(self.snapshots.load().params.forward(&graph).0.mu)
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<(), PpoError> {
        save_checkpoint(path, &self.snapshots.load().params)
    }

    pub fn write_training_log(&self, path: impl AsRef<Path>) -> Result<(), PpoError> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.log {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl SlicingPolicy for XSliceAgent {
    fn name(&self) -> &str {
        "xslice"
    }

    fn decide(&mut self, report: &KpmReport) -> Allocation {
        match self.step(report) {
            Ok(a) => a,
            Err(_) => {
                // Keep the RAN running on the equal split; the transition is lost.
                self.pending = None;
                Allocation::equal_split(self.cfg.specs.len(), self.cfg.n_rb)
            }
        }
    }

    fn idle(&mut self) {
        self.run_queued_update();
        self.poll_background(false);
    }
}

impl Drop for XSliceAgent {
    fn drop(&mut self) {
        if let Some(bg) = &mut self.background {
            bg.jobs.take();
            if let Some(h) = bg.handle.take() {
                let _ = h.join();
            }
        }
    }
}

fn spawn_trainer(mut learner: Learner, cell: Arc<SnapshotCell>) -> Background {
    let (job_tx, job_rx) = unbounded::<Job>();
    let (res_tx, res_rx) = unbounded();
    let handle = std::thread::Builder::new()
        .name("xslice-trainer".into())
        .spawn(move || {
            for job in job_rx {
                let r = learner.update(&job.transitions, job.bootstrap);
                if r.is_ok() {
                    cell.publish(learner.params.clone());
                }
                if res_tx.send(r).is_err() {
                    break;
                }
            }
        })
        .expect("spawn trainer thread");
    Background {
        jobs: Some(job_tx),
        results: res_rx,
        in_flight: 0,
        handle: Some(handle),
    }
}
