use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use xslice_harness::config::DEFAULT_WARMUP_ROUNDS;
use xslice_harness::summary::{format_table, write_summary};
use xslice_harness::sweep::{format_sweep, run_sweep, write_sweep, SweepParam};
use xslice_harness::{
    inject_event, load_scenario, parse_event, run_experiment, summarize, ExperimentConfig,
    Overrides, PolicyKind, TransportKind, Window,
};

#[derive(Parser)]
#[command(name = "xslice", version, about = "RAN slicing experiments")]
struct Cli {
    /// Log filter, e.g. `info` or `xslice_ppo=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(RunArgs),
    /// Compare metrics files.
    Summarize {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Round range `A:B`, `A:` or `:B`; defaults to the rounds after warm-up.
        #[arg(long)]
        window: Option<String>,
        #[arg(long, default_value_t = DEFAULT_WARMUP_ROUNDS)]
        warmup: u64,
        /// Also write summary.csv and summary.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One run per value of an agent hyperparameter.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        /// Run the values concurrently.
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Add events to a scenario and write the result as a scenario file.
    Inject {
        #[arg(long)]
        scenario: String,
        #[arg(long = "event", required = true)]
        events: Vec<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        rounds: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset name or scenario file.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, value_enum)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    transport: Option<TransportKind>,
    #[arg(long)]
    deadline_ms: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    /// Scenario event, e.g. `arrival@1000:slice=1,mbps=100`. Repeatable.
    #[arg(long = "event")]
    events: Vec<String>,
    /// Agent override `key=value` in config-file syntax, e.g. `lr=0.001`. Repeatable.
    #[arg(long = "set")]
    sets: Vec<String>,
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_toml_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => {
                let (Some(scenario), Some(policy)) = (&self.scenario, self.policy) else {
                    bail!("--scenario and --policy are required without --config");
                };
                ExperimentConfig::new(scenario.clone(), policy, 2000, 1)
            }
        };
        if let Some(s) = self.scenario {
            cfg.scenario = s;
        }
        if let Some(p) = self.policy {
            cfg.policy = p;
        }
        if let Some(r) = self.rounds {
            cfg.rounds = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if let Some(t) = self.transport {
            cfg.transport = t;
        }
        if self.deadline_ms.is_some() {
            cfg.deadline_ms = self.deadline_ms;
        }
        if let Some(w) = self.warmup {
            cfg.warmup_rounds = w;
        }
        cfg.events.extend(self.events);
        if !self.sets.is_empty() {
            let extra: Overrides =
                toml::from_str(&self.sets.join("\n")).context("parsing --set")?;
            merge(&mut cfg.overrides, extra)?;
        }
        Ok(cfg)
    }
}

/// Fields set in `extra` replace those in `base`.
fn merge(base: &mut Overrides, extra: Overrides) -> Result<()> {
    let mut table = toml::Value::try_from(&*base)?;
    let extra = toml::Value::try_from(&extra)?;
    if let (Some(t), Some(e)) = (table.as_table_mut(), extra.as_table()) {
        for (k, v) in e {
            t.insert(k.clone(), v.clone());
        }
    }
    *base = table.try_into()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Run(args) => {
            let cfg = args.into_config()?;
            let out = run_experiment(&cfg)?;
            let window = Window::default_for(cfg.warmup_rounds, out.rows.len() as u64);
            let s = xslice_harness::summary::summarize_rows(
                cfg.policy.label(),
                &out.rows,
                window,
                "metrics.csv",
            )?;
            print!("{}", format_table(&[s]));
            if let Some(dir) = &cfg.out {
                println!("wrote {}", dir.display());
            }
        }
        Command::Summarize {
            files,
            window,
            warmup,
            out,
        } => {
            let window = window.as_deref().map(Window::parse).transpose()?;
            let rows = summarize(&files, window, warmup)?;
            print!("{}", format_table(&rows));
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                write_summary(&dir, &rows)?;
            }
        }
        Command::Sweep {
            param,
            values,
            parallel,
            run,
        } => {
            let base = run.into_config()?;
            let rows = run_sweep(&base, param, &values, parallel);
            print!("{}", format_sweep(param, &rows));
            if let Some(dir) = &base.out {
                write_sweep(dir, param, &rows)?;
            }
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            if failed == rows.len() {
                bail!("every sweep run failed");
            }
        }
        Command::Inject {
            scenario,
            events,
            seed,
            rounds,
            out,
        } => {
            let mut s = load_scenario(&scenario, seed, rounds)?;
            for e in &events {
                s = inject_event(&s, parse_event(e)?)?;
            }
            let text = s.to_toml_string();
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::new(&cli.log))
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
