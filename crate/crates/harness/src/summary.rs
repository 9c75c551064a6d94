//! Comparison tables over metrics files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::HarnessError;
use crate::metrics::{percentile, MetricsRow};

/// Half-open round range `[start, end)`; `end = None` runs to the last round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: u64,
    pub end: Option<u64>,
}

impl Window {
    pub fn all() -> Self {
        Self {
            start: 0,
            end: None,
        }
    }

    /// Rounds after the warm-up, or everything for runs no longer than it.
    pub fn default_for(warmup: u64, rounds: u64) -> Self {
        if rounds > warmup {
            Self {
                start: warmup,
                end: None,
            }
        } else {
            Self::all()
        }
    }

    /// Parses `A:B`, `A:` or `:B`.
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        let bad = || HarnessError::Config(format!("window `{s}` must look like A:B, A: or :B"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let start = if a.trim().is_empty() {
            0
        } else {
            a.trim().parse().map_err(|_| bad())?
        };
        let end = if b.trim().is_empty() {
            None
        } else {
            Some(b.trim().parse().map_err(|_| bad())?)
        };
        if end.is_some_and(|e| e <= start) {
            return Err(bad());
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, round: u64) -> bool {
        round >= self.start && self.end.is_none_or(|e| round < e)
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.end {
            Some(e) => write!(f, "{}:{e}", self.start),
            None => write!(f, "{}:", self.start),
        }
    }
}

/// The columns a summary needs from one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    pub round: u64,
    pub throughput_mbps: f64,
    pub latency_ms: f64,
    pub bler: f64,
    pub regret: f64,
}

impl From<&MetricsRow> for RoundStats {
    fn from(r: &MetricsRow) -> Self {
        Self {
            round: r.round,
            throughput_mbps: r.throughput_mbps,
            latency_ms: r.latency_ms,
            bler: r.bler,
            regret: r.regret,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub policy: String,
    pub file: String,
    pub window: Window,
    pub rounds: usize,
    pub throughput_mbps: f64,
    pub latency_ms: f64,
    pub bler: f64,
    pub regret: f64,
    pub regret_p50: f64,
    pub regret_p95: f64,
}

pub fn summarize_stats(
    policy: &str,
    stats: &[RoundStats],
    window: Window,
    file: &str,
) -> Result<Summary, HarnessError> {
    let (first, last) = match (stats.first(), stats.last()) {
        (Some(a), Some(b)) => (a.round, b.round),
        _ => {
            return Err(HarnessError::Metrics {
                file: file.into(),
                reason: "no rounds recorded".into(),
            })
        }
    };
    let inside: Vec<&RoundStats> = stats.iter().filter(|s| window.contains(s.round)).collect();
    if window.start > last || window.end.is_some_and(|e| e > last + 1) || inside.is_empty() {
        return Err(HarnessError::Window {
            start: window.start,
            end: window.end.unwrap_or(last + 1),
            first,
            last,
            file: file.into(),
        });
    }
    let n = inside.len() as f64;
    // shifted by the first value, so constant columns come out exact
    let mean = |f: fn(&RoundStats) -> f64| {
        let x0 = f(inside[0]);
        x0 + inside.iter().map(|s| f(s) - x0).sum::<f64>() / n
    };
    let regrets: Vec<f64> = inside.iter().map(|s| s.regret).collect();
    Ok(Summary {
        policy: policy.into(),
        file: file.into(),
        window,
        rounds: inside.len(),
        throughput_mbps: mean(|s| s.throughput_mbps),
        latency_ms: mean(|s| s.latency_ms),
        bler: mean(|s| s.bler),
        regret: mean(|s| s.regret),
        regret_p50: percentile(&regrets, 0.5),
        regret_p95: percentile(&regrets, 0.95),
    })
}

pub fn summarize_rows(
    policy: &str,
    rows: &[MetricsRow],
    window: Window,
    file: &str,
) -> Result<Summary, HarnessError> {
    let stats: Vec<RoundStats> = rows.iter().map(RoundStats::from).collect();
    summarize_stats(policy, &stats, window, file)
}

/// Policy name and per-round statistics of a metrics CSV.
pub fn read_metrics(path: &Path) -> Result<(String, Vec<RoundStats>), HarnessError> {
    let file = path.display().to_string();
    let err = |reason: String| HarnessError::Metrics {
        file: file.clone(),
        reason,
    };
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| err(format!("missing column `{name}`")))
    };
    let (ip, ir, it, il, ib, ig) = (
        col("policy")?,
        col("round")?,
        col("throughput_mbps")?,
        col("latency_ms")?,
        col("bler")?,
        col("regret")?,
    );
    let mut policy = None;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, HarnessError> {
            rec.get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| {
                    err(format!(
                        "row {}: column `{}` is not a number",
                        line + 2,
                        &headers[i]
                    ))
                })
        };
        let name = rec.get(ip).unwrap_or_default().to_string();
        match &policy {
            None => policy = Some(name),
            Some(p) if *p != name => {
                return Err(err(format!(
                    "row {}: mixes policies `{p}` and `{name}`",
                    line + 2
                )))
            }
            Some(_) => {}
        }
        out.push(RoundStats {
            round: num(ir)? as u64,
            throughput_mbps: num(it)?,
            latency_ms: num(il)?,
            bler: num(ib)?,
            regret: num(ig)?,
        });
    }
    let policy = policy.ok_or_else(|| err("no rounds recorded".into()))?;
    Ok((policy, out))
}

/// One summary per file, ordered by policy name and then by file name.
pub fn summarize(
    paths: &[impl AsRef<Path>],
    window: Option<Window>,
    warmup: u64,
) -> Result<Vec<Summary>, HarnessError> {
    if paths.is_empty() {
        return Err(HarnessError::Config("no metrics files given".into()));
    }
    let mut out = Vec::new();
    for p in paths {
        let (policy, stats) = read_metrics(p.as_ref())?;
        let w = window.unwrap_or_else(|| Window::default_for(warmup, stats.len() as u64));
        out.push(summarize_stats(
            &policy,
            &stats,
            w,
            &p.as_ref().display().to_string(),
        )?);
    }
    out.sort_by(|a, b| a.policy.cmp(&b.policy).then_with(|| a.file.cmp(&b.file)));
    Ok(out)
}

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "policy",
    "file",
    "window",
    "rounds",
    "throughput_mbps",
    "latency_ms",
    "bler",
    "regret",
    "regret_p50",
    "regret_p95",
];

pub fn write_summary_csv<W: std::io::Write>(w: W, rows: &[Summary]) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_COLUMNS)?;
    for s in rows {
        out.write_record([
            s.policy.clone(),
            s.file.clone(),
            s.window.to_string(),
            s.rounds.to_string(),
            s.throughput_mbps.to_string(),
            s.latency_ms.to_string(),
            s.bler.to_string(),
            s.regret.to_string(),
            s.regret_p50.to_string(),
            s.regret_p95.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Aligned text table in the shape of a policy comparison.
pub fn format_table(rows: &[Summary]) -> String {
    let mut out = String::new();
    let width = rows
        .iter()
        .map(|r| r.policy.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let _ = writeln!(
        out,
        "{:<width$}  {:>8}  {:>10}  {:>10}  {:>8}  {:>8}  {:>8}  {:>8}",
        "policy", "rounds", "tp_mbps", "latency_ms", "bler", "regret", "p50", "p95"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>10.2}  {:>10.2}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}",
            r.policy,
            r.rounds,
            r.throughput_mbps,
            r.latency_ms,
            r.bler,
            r.regret,
            r.regret_p50,
            r.regret_p95
        );
    }
    out
}

pub fn write_summary(dir: &Path, rows: &[Summary]) -> Result<(), HarnessError> {
    write_summary_csv(std::fs::File::create(dir.join("summary.csv"))?, rows)?;
    std::fs::write(dir.join("summary.txt"), format_table(rows))?;
    Ok(())
}
