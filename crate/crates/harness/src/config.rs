//! Experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use xslice_core::{RegretWeights, RewardBasis};
use xslice_gcn::FEATURES;
use xslice_ppo::{AgentConfig, PenaltyMode, TrainingMode};

use crate::error::HarnessError;

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Xslice,
    Single,
    Nvs,
    Prop,
}

impl PolicyKind {
    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::Xslice => "xslice",
            PolicyKind::Single => "single",
            PolicyKind::Nvs => "nvs",
            PolicyKind::Prop => "prop",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// How the environment and the policy are connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TransportKind {
    /// Same thread, no protocol.
    #[default]
    Direct,
    /// Two threads joined by an in-process channel.
    Inproc,
    /// Two threads joined by a Unix socket in the output directory.
    Socket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyChoice {
    Off,
    ActorMask,
    Full,
    Skip,
}

impl From<PenaltyChoice> for PenaltyMode {
    fn from(p: PenaltyChoice) -> Self {
        match p {
            PenaltyChoice::Off => PenaltyMode::Off,
            PenaltyChoice::ActorMask => PenaltyMode::ActorMask,
            PenaltyChoice::Full => PenaltyMode::Full,
            PenaltyChoice::Skip => PenaltyMode::Skip,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingChoice {
    Inline,
    Background,
    Frozen,
}

/// Agent settings that differ from the defaults. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub lr: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub clip_eps: Option<f64>,
    pub epochs: Option<usize>,
    pub minibatch: Option<usize>,
    pub rollout: Option<usize>,
    pub value_coef: Option<f64>,
    pub max_grad_norm: Option<f64>,
    /// MLP hidden width.
    pub hidden: Option<usize>,
    pub mlp_layers: Option<usize>,
    pub gcn_layers: Option<usize>,
    /// GCN hidden and output width.
    pub embedding: Option<usize>,
    pub shared_encoder: Option<bool>,
    pub init_sigma: Option<f64>,
    pub warmup_steps: Option<usize>,
    pub n_max: Option<usize>,
    pub min_prb: Option<u32>,
    pub utilization_c: Option<f64>,
    pub r_max: Option<f64>,
    pub reward_basis: Option<RewardBasis>,
    pub penalty: Option<PenaltyChoice>,
    pub penalty_value: Option<f64>,
    pub min_rb_per_session: Option<u32>,
    pub training: Option<TrainingChoice>,
    /// Replaces every slice's regret weights.
    pub weights: Option<RegretWeights>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut AgentConfig) -> Result<(), HarnessError> {
        let p = &mut cfg.ppo;
        macro_rules! set {
            ($field:ident => $target:expr) => {
                if let Some(v) = self.$field {
                    $target = v;
                }
            };
        }
        set!(lr => p.lr);
        set!(gamma => p.gamma);
        set!(lambda => p.lambda);
        set!(clip_eps => p.clip_eps);
        set!(epochs => p.epochs);
        set!(minibatch => p.minibatch);
        set!(rollout => p.rollout);
        set!(value_coef => p.value_coef);
        if self.max_grad_norm.is_some() {
            p.max_grad_norm = self.max_grad_norm;
        }
        set!(hidden => cfg.policy.hidden);
        set!(mlp_layers => cfg.policy.mlp_layers);
        set!(shared_encoder => cfg.policy.shared_encoder);
        set!(init_sigma => cfg.policy.init_sigma);
        set!(warmup_steps => cfg.warmup_steps);
        set!(n_max => cfg.n_max);
        set!(min_prb => cfg.min_prb);
        set!(utilization_c => cfg.utilization_c);
        set!(r_max => cfg.r_max);
        set!(reward_basis => cfg.reward_basis);
        set!(penalty_value => cfg.penalty.value);
        set!(min_rb_per_session => cfg.penalty.min_rb_per_session);
        if let Some(s) = self.init_sigma {
            cfg.warmup_sigma = s;
        }
        if let Some(m) = self.penalty {
            cfg.penalty.mode = m.into();
        }
        if let Some(t) = self.training {
            cfg.training = match t {
                TrainingChoice::Inline => TrainingMode::Inline,
                TrainingChoice::Background => TrainingMode::Background,
                TrainingChoice::Frozen => TrainingMode::Frozen,
            };
        }
        if self.gcn_layers.is_some() || self.embedding.is_some() {
            let current = &cfg.policy.gcn_widths;
            let layers = self.gcn_layers.unwrap_or(current.len() - 1);
            let width = self
                .embedding
                .unwrap_or(*current.last().expect("gcn widths"));
            if layers == 0 || width == 0 {
                return Err(HarnessError::Config(
                    "gcn_layers and embedding must be positive".into(),
                ));
            }
            let mut widths = vec![FEATURES];
            widths.extend(std::iter::repeat_n(width, layers));
            cfg.policy.gcn_widths = widths;
        }
        if cfg.policy.hidden == 0 || cfg.policy.mlp_layers == 0 {
            return Err(HarnessError::Config(
                "hidden and mlp_layers must be positive".into(),
            ));
        }
        if cfg.ppo.rollout == 0 || cfg.ppo.minibatch == 0 {
            return Err(HarnessError::Config(
                "rollout and minibatch must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Preset name (`light`, `medium`, `intensive`, ...) or a scenario file.
    pub scenario: String,
    pub policy: PolicyKind,
    pub rounds: u64,
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub transport: TransportKind,
    /// Command deadline for protocol transports; absent means lockstep.
    #[serde(default)]
    pub deadline_ms: Option<u64>,
    /// Rounds excluded from summaries.
    #[serde(default = "default_warmup_rounds")]
    pub warmup_rounds: u64,
    /// Scenario events in the `inject` syntax.
    #[serde(default)]
    pub events: Vec<String>,
    #[serde(default)]
    pub overrides: Overrides,
}

pub const DEFAULT_WARMUP_ROUNDS: u64 = 500;

fn default_warmup_rounds() -> u64 {
    DEFAULT_WARMUP_ROUNDS
}

impl ExperimentConfig {
    pub fn new(scenario: impl Into<String>, policy: PolicyKind, rounds: u64, seed: u64) -> Self {
        Self {
            scenario: scenario.into(),
            policy,
            rounds,
            seed,
            out: None,
            transport: TransportKind::Direct,
            deadline_ms: None,
            warmup_rounds: DEFAULT_WARMUP_ROUNDS,
            events: Vec::new(),
            overrides: Overrides::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.rounds == 0 {
            return Err(HarnessError::Config("rounds must be positive".into()));
        }
        if let Some(d) = self.deadline_ms {
            if d == 0 || d > 1000 {
                return Err(HarnessError::Config(format!(
                    "deadline_ms = {d} must lie in 1..=1000"
                )));
            }
        }
        Ok(())
    }
}
