//! Wiring an environment to a policy and recording what happens.

use std::path::{Path, PathBuf};
use std::thread;
use std::time::Instant;

use tracing::info;
use xslice_baselines::{Nvs, NvsConfig, PropDemand, SingleSlice};
use xslice_core::{Allocation, KpmReport, SlicingPolicy};
use xslice_e2lite::{
    inproc_pair, run_ran_endpoint, run_xapp_endpoint, slice_digest, E2Error, RanEndpointConfig,
    RanSummary, Transport, UnixTransport, XappEndpointConfig, XappSummary,
};
use xslice_gcn::FeatureBounds;
use xslice_ppo::{write_checkpoint, AgentConfig, StepRecord, XSliceAgent};
use xslice_ransim::{Environment, RanEnv, Scenario};

use crate::config::{ExperimentConfig, PolicyKind, TransportKind};
use crate::error::HarnessError;
use crate::inject::{inject_event, parse_event};
use crate::metrics::{write_metrics_file, write_timing_file, MetricsRow, Scoring};
use crate::presets::load_scenario;
use crate::summary::{summarize_rows, write_summary, Window};

/// Any of the policies an experiment can run.
pub enum Policy {
    Xslice(Box<XSliceAgent>),
    Baseline(Box<dyn SlicingPolicy + Send>),
}

impl SlicingPolicy for Policy {
    fn name(&self) -> &str {
        match self {
            Policy::Xslice(a) => a.name(),
            Policy::Baseline(p) => p.name(),
        }
    }

    fn decide(&mut self, report: &KpmReport) -> Allocation {
        match self {
            Policy::Xslice(a) => a.decide(report),
            Policy::Baseline(p) => p.decide(report),
        }
    }

    fn idle(&mut self) {
        match self {
            Policy::Xslice(a) => a.idle(),
            Policy::Baseline(p) => p.idle(),
        }
    }
}

/// Scenario with the configured events and weight override applied.
pub fn prepare_scenario(cfg: &ExperimentConfig) -> Result<Scenario, HarnessError> {
    let mut scenario = load_scenario(&cfg.scenario, cfg.seed, cfg.rounds)?;
    if let Some(w) = cfg.overrides.weights {
        for s in &mut scenario.slices {
            s.weights = w;
        }
    }
    for spec in &cfg.events {
        scenario = inject_event(&scenario, parse_event(spec)?)?;
    }
    scenario.validate()?;
    Ok(scenario)
}

pub fn agent_config(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
) -> Result<AgentConfig, HarnessError> {
    let mut a = AgentConfig::new(scenario.slices.clone(), scenario.n_rb, cfg.seed);
    a.bounds = FeatureBounds::for_band(scenario.n_rb, 500.0, 512.0, 250.0);
    cfg.overrides.apply(&mut a)?;
    Ok(a)
}

pub fn scoring(agent: &AgentConfig) -> Scoring {
    Scoring {
        utilization_c: agent.utilization_c,
        r_max: agent.r_max,
        reward_basis: agent.reward_basis,
        min_rb_per_session: agent.penalty.min_rb_per_session,
    }
}

pub fn build_policy(
    kind: PolicyKind,
    scenario: &Scenario,
    agent: &AgentConfig,
) -> Result<Policy, HarnessError> {
    let specs = scenario.slices.clone();
    Ok(match kind {
        PolicyKind::Xslice => Policy::Xslice(Box::new(XSliceAgent::new(agent.clone())?)),
        PolicyKind::Single => Policy::Baseline(Box::new(SingleSlice::new(scenario.n_rb))),
        PolicyKind::Nvs => Policy::Baseline(Box::new(Nvs::new(
            specs,
            scenario.n_rb,
            NvsConfig::default(),
        )?)),
        PolicyKind::Prop => Policy::Baseline(Box::new(PropDemand::new(
            specs,
            scenario.n_rb,
            agent.min_prb,
        )?)),
    })
}

#[derive(Debug)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub scenario: Scenario,
    pub rows: Vec<MetricsRow>,
    /// Report-in to command-out, microseconds, one per round.
    pub decision_us: Vec<f64>,
    pub checkpoint: Option<Vec<u8>>,
    pub training_log: Vec<StepRecord>,
    /// Successful and failed agent updates.
    pub updates: (usize, usize),
    pub transport: Option<RanSummary>,
    pub dir: Option<PathBuf>,
}

impl RunOutput {
    pub fn regrets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.regret).collect()
    }

    /// Mean regret over rounds `from..`.
    pub fn mean_regret_from(&self, from: u64) -> f64 {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.round >= from)
            .map(|r| r.regret)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Runs one experiment. When `cfg.out` is set the directory receives
/// `config.toml`, `scenario.toml`, `metrics.csv`, `timing.csv`,
/// `summary.csv`, `summary.txt` and, for the learning agent,
/// `checkpoint.bin` and `training.csv`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let scenario = prepare_scenario(cfg)?;
    let agent_cfg = agent_config(cfg, &scenario)?;
    let score = scoring(&agent_cfg);
    let mut policy = build_policy(cfg.policy, &scenario, &agent_cfg)?;
    let mut env = RanEnv::new(scenario.clone())?;
    let label = cfg.policy.label();
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
    }
    info!(policy = label, scenario = %scenario.name, rounds = cfg.rounds, seed = cfg.seed, "starting run");

    let mut rows = Vec::with_capacity(cfg.rounds as usize);
    let mut decision_us = Vec::with_capacity(cfg.rounds as usize);
    let specs = scenario.slices.clone();
    let mut transport_summary = None;
    match cfg.transport {
        TransportKind::Direct => {
            let mut report = env.initial_report();
            for round in 0..cfg.rounds {
                let t0 = Instant::now();
                let alloc = policy.decide(&report);
                decision_us.push(t0.elapsed().as_secs_f64() * 1e6);
                let after = env.play(&alloc)?;
                rows.push(MetricsRow::from_round(
                    label, round, &specs, &after, &alloc, score,
                )?);
                policy.idle();
                report = after;
            }
        }
        TransportKind::Inproc | TransportKind::Socket => {
            let (ran_t, xapp_t): (Box<dyn Transport + Send>, Box<dyn Transport + Send>) =
                match cfg.transport {
                    TransportKind::Inproc => {
                        let (a, b) = inproc_pair();
                        (Box::new(a), Box::new(b))
                    }
                    _ => {
                        let (a, b) = socket_pair(cfg.out.as_deref())?;
                        (Box::new(a), Box::new(b))
                    }
                };
            let ran_cfg = RanEndpointConfig {
                deadline: cfg.deadline_ms.map(std::time::Duration::from_millis),
                rounds: cfg.rounds,
                subscribe_timeout: Some(std::time::Duration::from_secs(30)),
            };
            let xapp_cfg = XappEndpointConfig {
                period_ms: scenario.round_ms as u64,
                expected_digest: Some(slice_digest(&specs)),
            };
            let (summary, xs, returned) =
                run_over_transport(env, policy, ran_t, xapp_t, &ran_cfg, &xapp_cfg, |o| {
                    MetricsRow::from_round(label, o.round, &specs, o.after, o.allocation, score)
                })?;
            policy = returned;
            let (ran_summary, ran_rows) = summary;
            rows = ran_rows;
            decision_us = xs
                .decision_times
                .iter()
                .map(|d| d.as_secs_f64() * 1e6)
                .collect();
            transport_summary = Some(ran_summary);
        }
    }

    let (checkpoint, training_log, updates) = match &mut policy {
        Policy::Xslice(agent) => {
            agent.finish_training();
            let mut buf = Vec::new();
            write_checkpoint(&mut buf, &agent.snapshot().params)?;
            (Some(buf), agent.log().to_vec(), agent.updates())
        }
        Policy::Baseline(_) => (None, Vec::new(), (0, 0)),
    };
    let out = RunOutput {
        config: cfg.clone(),
        scenario,
        rows,
        decision_us,
        checkpoint,
        training_log,
        updates,
        transport: transport_summary,
        dir: cfg.out.clone(),
    };
    if let Some(dir) = &cfg.out {
        write_outputs(dir, &out, &policy)?;
    }
    Ok(out)
}

type RowsAndSummary = (RanSummary, Vec<MetricsRow>);

fn run_over_transport(
    mut env: RanEnv,
    policy: Policy,
    mut ran_t: Box<dyn Transport + Send>,
    mut xapp_t: Box<dyn Transport + Send>,
    ran_cfg: &RanEndpointConfig,
    xapp_cfg: &XappEndpointConfig,
    mut row: impl FnMut(&xslice_e2lite::RoundOutcome<'_>) -> Result<MetricsRow, xslice_core::CoreError>,
) -> Result<(RowsAndSummary, XappSummary, Policy), HarnessError> {
    let xapp_cfg = xapp_cfg.clone();
    let xapp = thread::spawn(move || {
        let mut policy = policy;
        let r = run_xapp_endpoint(&mut policy, &mut xapp_t, &xapp_cfg);
        (r, policy)
    });
    let mut rows = Vec::new();
    let mut row_err = None;
    let ran = run_ran_endpoint(&mut env, &mut ran_t, ran_cfg, |o| match row(&o) {
        Ok(r) => rows.push(r),
        Err(e) => {
            row_err.get_or_insert(e);
        }
    });
    drop(ran_t);
    let (xr, policy) = xapp.join().expect("xApp thread panicked");
    let summary = ran.map_err(|source| HarnessError::Transport {
        rounds: rows.len() as u64,
        source,
    })?;
    if let Some(e) = row_err {
        return Err(e.into());
    }
    let xs = xr.map_err(|source| HarnessError::Transport {
        rounds: summary.rounds,
        source,
    })?;
    if summary.rounds < ran_cfg.rounds {
        return Err(HarnessError::Transport {
            rounds: summary.rounds,
            source: E2Error::Closed,
        });
    }
    Ok(((summary, rows), xs, policy))
}

fn socket_pair(dir: Option<&Path>) -> Result<(UnixTransport, UnixTransport), HarnessError> {
    let Some(dir) = dir else {
        let (a, b) = std::os::unix::net::UnixStream::pair()?;
        return Ok((UnixTransport::from_stream(a), UnixTransport::from_stream(b)));
    };
    let path = dir.join("e2.sock");
    let _ = std::fs::remove_file(&path);
    let listener = std::os::unix::net::UnixListener::bind(&path)?;
    let client = UnixTransport::connect(&path).map_err(|e| HarnessError::Transport {
        rounds: 0,
        source: e,
    })?;
    let (server, _) = listener.accept()?;
    let _ = std::fs::remove_file(&path);
    Ok((UnixTransport::from_stream(server), client))
}

fn write_outputs(dir: &Path, out: &RunOutput, policy: &Policy) -> Result<(), HarnessError> {
    std::fs::write(dir.join("config.toml"), out.config.to_toml_string())?;
    std::fs::write(dir.join("scenario.toml"), out.scenario.to_toml_string())?;
    let k = out.scenario.slices.len();
    write_metrics_file(&dir.join("metrics.csv"), k, &out.rows)?;
    write_timing_file(&dir.join("timing.csv"), 0, &out.decision_us)?;
    let window = Window::default_for(out.config.warmup_rounds, out.rows.len() as u64);
    let summary = summarize_rows(out.config.policy.label(), &out.rows, window, "metrics.csv")?;
    write_summary(dir, std::slice::from_ref(&summary))?;
    if let (Some(bytes), Policy::Xslice(agent)) = (&out.checkpoint, policy) {
        std::fs::write(dir.join("checkpoint.bin"), bytes)?;
        agent.write_training_log(dir.join("training.csv"))?;
    }
    Ok(())
}
