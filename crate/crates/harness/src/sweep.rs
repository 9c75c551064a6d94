//! Hyperparameter sweeps: one run per value, all with the base seed.

use std::path::Path;

use crate::config::{ExperimentConfig, Overrides};
use crate::error::HarnessError;
use crate::run::run_experiment;
use crate::summary::{summarize_rows, Summary, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    /// Hidden width of the actor and critic MLPs.
    Hidden,
    GcnLayers,
    /// GCN hidden and output width.
    Embedding,
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::Hidden => "hidden",
            SweepParam::GcnLayers => "gcn_layers",
            SweepParam::Embedding => "embedding",
        }
    }

    pub fn set(self, o: &mut Overrides, value: usize) {
        match self {
            SweepParam::Hidden => o.hidden = Some(value),
            SweepParam::GcnLayers => o.gcn_layers = Some(value),
            SweepParam::Embedding => o.embedding = Some(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: usize,
    /// Summary of the run, or the reason it failed.
    pub outcome: Result<Summary, String>,
}

/// The configuration of the run for `value`. With an output directory each
/// run gets its own `<param>-<value>` subdirectory.
pub fn sweep_config(base: &ExperimentConfig, param: SweepParam, value: usize) -> ExperimentConfig {
    let mut cfg = base.clone();
    param.set(&mut cfg.overrides, value);
    cfg.out = base
        .out
        .as_ref()
        .map(|d| d.join(format!("{}-{value}", param.label())));
    cfg
}

fn one(base: &ExperimentConfig, param: SweepParam, value: usize) -> SweepRow {
    let cfg = sweep_config(base, param, value);
    let outcome = run_experiment(&cfg)
        .and_then(|out| {
            let window = Window::default_for(cfg.warmup_rounds, out.rows.len() as u64);
            summarize_rows(
                cfg.policy.label(),
                &out.rows,
                window,
                &format!("{}-{value}", param.label()),
            )
        })
        .map_err(|e| e.to_string());
    if let Err(e) = &outcome {
        tracing::warn!(param = param.label(), value, error = %e, "sweep run failed");
    }
    SweepRow { value, outcome }
}

/// Runs every value in order, or on one thread per value when `parallel`
/// is set. A failing run is recorded and the sweep goes on.
pub fn run_sweep(
    base: &ExperimentConfig,
    param: SweepParam,
    values: &[usize],
    parallel: bool,
) -> Vec<SweepRow> {
    if !parallel {
        return values.iter().map(|&v| one(base, param, v)).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = values
            .iter()
            .map(|&v| s.spawn(move || one(base, param, v)))
            .collect();
        handles
            .into_iter()
            .zip(values)
            .map(|(h, &v)| {
                h.join().unwrap_or_else(|_| SweepRow {
                    value: v,
                    outcome: Err("run panicked".into()),
                })
            })
            .collect()
    })
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "param",
    "value",
    "status",
    "rounds",
    "regret",
    "regret_p50",
    "regret_p95",
    "error",
];

pub fn write_sweep_csv<W: std::io::Write>(
    w: W,
    param: SweepParam,
    rows: &[SweepRow],
) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        let mut rec = vec![param.label().to_string(), r.value.to_string()];
        match &r.outcome {
            Ok(s) => rec.extend([
                "ok".into(),
                s.rounds.to_string(),
                s.regret.to_string(),
                s.regret_p50.to_string(),
                s.regret_p95.to_string(),
                String::new(),
            ]),
            Err(e) => rec.extend([
                "failed".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ]),
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn format_sweep(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{:>12}  {:>10}  {:>10}  {:>10}\n",
        param.label(),
        "regret",
        "p50",
        "p95"
    );
    for r in rows {
        match &r.outcome {
            Ok(s) => out.push_str(&format!(
                "{:>12}  {:>10.4}  {:>10.4}  {:>10.4}\n",
                r.value, s.regret, s.regret_p50, s.regret_p95
            )),
            Err(e) => out.push_str(&format!("{:>12}  failed: {e}\n", r.value)),
        }
    }
    out
}

pub fn write_sweep(dir: &Path, param: SweepParam, rows: &[SweepRow]) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    write_sweep_csv(std::fs::File::create(dir.join("sweep.csv"))?, param, rows)?;
    std::fs::write(dir.join("sweep.txt"), format_sweep(param, rows))?;
    Ok(())
}
