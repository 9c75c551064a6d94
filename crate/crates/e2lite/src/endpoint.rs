//! The two protocol loops: the RAN side that reports and applies commands,
//! and the xApp side that answers reports with slicing decisions.

use std::time::{Duration, Instant};

use tracing::{debug, warn};
use xslice_core::{Allocation, KpmReport, SlicingPolicy};
use xslice_ransim::Environment;

use crate::error::E2Error;
use crate::message::{slice_digest, E2Message};
use crate::transport::{Received, Transport};

pub const DEFAULT_DEADLINE: Duration = Duration::from_millis(10);
pub const MAX_DEADLINE: Duration = Duration::from_millis(1000);

#[derive(Debug, Clone, PartialEq)]
pub struct RanEndpointConfig {
    /// How long to wait for the command answering a report. `None` waits
    /// indefinitely, so every round is played with a fresh command.
    pub deadline: Option<Duration>,
    pub rounds: u64,
    /// How long to wait for the initial subscription.
    pub subscribe_timeout: Option<Duration>,
}

impl RanEndpointConfig {
    pub fn new(rounds: u64) -> Self {
        Self {
            deadline: Some(DEFAULT_DEADLINE),
            rounds,
            subscribe_timeout: None,
        }
    }

    pub fn lockstep(rounds: u64) -> Self {
        Self {
            deadline: None,
            ..Self::new(rounds)
        }
    }
}

/// What happened in one played round.
#[derive(Debug)]
pub struct RoundOutcome<'a> {
    pub round: u64,
    /// Report the decision was based on (state before the round).
    pub before: &'a KpmReport,
    pub allocation: &'a Allocation,
    /// Whether `allocation` answered this round's report.
    pub fresh: bool,
    /// Report produced by playing the round.
    pub after: &'a KpmReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RanSummary {
    pub rounds: u64,
    pub fresh: u64,
    pub stale: u64,
    /// Commands that arrived after their round had been played.
    pub late_discarded: u64,
    pub rejected: u64,
    pub malformed: u64,
    /// The peer went away before all rounds were played.
    pub peer_closed: bool,
}

enum Wait {
    Fresh(Allocation),
    Missed,
    Closed,
}

/// Runs the RAN side for up to `cfg.rounds` rounds. Each round sends the
/// current report, waits for the matching command until the deadline, falls
/// back to the previous allocation (initially the equal split) when none
/// came, plays the round and hands the outcome to `on_round`.
pub fn run_ran_endpoint<E, T, F>(
    env: &mut E,
    transport: &mut T,
    cfg: &RanEndpointConfig,
    mut on_round: F,
) -> Result<RanSummary, E2Error>
where
    E: Environment + ?Sized,
    T: Transport + ?Sized,
    F: FnMut(RoundOutcome<'_>),
{
    let mut summary = RanSummary::default();
    match wait_subscribe(transport, cfg.subscribe_timeout)? {
        true => {}
        false => {
            summary.peer_closed = true;
            return Ok(summary);
        }
    }
    let digest = slice_digest(env.specs());
    let mut previous = Allocation::equal_split(env.specs().len(), env.n_rb());
    let mut report = env.initial_report();
    for round in 0..cfg.rounds {
        let msg = E2Message::KpmReport {
            round,
            records: report.records.clone(),
            slice_digest: digest.clone(),
        };
        if let Err(E2Error::Closed) = transport.send(&msg) {
            summary.peer_closed = true;
            break;
        }
        let (alloc, fresh) = match wait_command(env, transport, round, cfg.deadline, &mut summary)?
        {
            Wait::Fresh(a) => (a, true),
            Wait::Missed => (previous.clone(), false),
            Wait::Closed => {
                summary.peer_closed = true;
                break;
            }
        };
        let after = env.play(&alloc)?;
        summary.rounds += 1;
        if fresh {
            summary.fresh += 1;
        } else {
            summary.stale += 1;
        }
        on_round(RoundOutcome {
            round,
            before: &report,
            allocation: &alloc,
            fresh,
            after: &after,
        });
        previous = alloc;
        report = after;
    }
    if !summary.peer_closed {
        let _ = transport.send(&E2Message::Bye {});
    }
    Ok(summary)
}

fn wait_subscribe<T: Transport + ?Sized>(
    transport: &mut T,
    timeout: Option<Duration>,
) -> Result<bool, E2Error> {
    let deadline = timeout.map(|t| Instant::now() + t);
    loop {
        let left = deadline.map(|d| d.saturating_duration_since(Instant::now()));
        match transport.recv(left) {
            Ok(Received::Message {
                msg: E2Message::Subscribe { .. },
                ..
            }) => return Ok(true),
            Ok(Received::Message {
                msg: E2Message::Bye {},
                ..
            })
            | Err(E2Error::Closed) => return Ok(false),
            Ok(Received::Timeout) => {
                return Err(E2Error::Protocol("no subscription before timeout".into()))
            }
            Ok(other) => debug!(?other, "ignored before subscription"),
            Err(e) => return Err(e),
        }
    }
}

fn wait_command<E, T>(
    env: &E,
    transport: &mut T,
    round: u64,
    deadline: Option<Duration>,
    summary: &mut RanSummary,
) -> Result<Wait, E2Error>
where
    E: Environment + ?Sized,
    T: Transport + ?Sized,
{
    let until = deadline.map(|d| Instant::now() + d);
    loop {
        let left = until.map(|u| u.saturating_duration_since(Instant::now()));
        let received = match transport.recv(left) {
            Ok(r) => r,
            Err(E2Error::Closed) => return Ok(Wait::Closed),
            Err(e) => return Err(e),
        };
        match received {
            Received::Timeout => return Ok(Wait::Missed),
            Received::Malformed(e) => {
                warn!(round, error = %e, "malformed message from xApp");
                summary.malformed += 1;
            }
            Received::Message { msg, .. } => match msg {
                E2Message::SliceCommand {
                    round: r,
                    allocation,
                } if r == round => match env.check(&allocation) {
                    Ok(()) => return Ok(Wait::Fresh(allocation)),
                    Err(e) => {
                        warn!(round, error = %e, "rejected slice command");
                        summary.rejected += 1;
                        return Ok(Wait::Missed);
                    }
                },
                E2Message::SliceCommand { round: r, .. } if r < round => {
                    debug!(round, command_round = r, "discarded late command");
                    summary.late_discarded += 1;
                }
                E2Message::Bye {} => return Ok(Wait::Closed),
                other => debug!(round, kind = other.kind(), "ignored message"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct XappEndpointConfig {
    pub period_ms: u64,
    /// Refuse to run against a RAN whose slice configuration differs.
    pub expected_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct XappSummary {
    pub decisions: u64,
    pub malformed: u64,
    /// Time from a report's arrival to its command being sent.
    pub decision_times: Vec<Duration>,
}

/// Runs the xApp side until the RAN says goodbye or disconnects. Each report
/// is answered with `policy.decide`; `policy.idle` runs after the answer
/// has been sent.
pub fn run_xapp_endpoint<P, T>(
    policy: &mut P,
    transport: &mut T,
    cfg: &XappEndpointConfig,
) -> Result<XappSummary, E2Error>
where
    P: SlicingPolicy + ?Sized,
    T: Transport + ?Sized,
{
    let mut summary = XappSummary::default();
    match transport.send(&E2Message::Subscribe {
        period_ms: cfg.period_ms,
    }) {
        Ok(()) => {}
        Err(E2Error::Closed) => return Ok(summary),
        Err(e) => return Err(e),
    }
    loop {
        let received = match transport.recv(None) {
            Ok(r) => r,
            Err(E2Error::Closed) => break,
            Err(e) => return Err(e),
        };
        let (msg, at) = match received {
            Received::Message { msg, at } => (msg, at),
            Received::Malformed(e) => {
                warn!(error = %e, "skipping malformed report");
                summary.malformed += 1;
                continue;
            }
            Received::Timeout => continue,
        };
        match msg {
            E2Message::KpmReport {
                round,
                records,
                slice_digest,
            } => {
                if let Some(expected) = &cfg.expected_digest {
                    if *expected != slice_digest {
                        return Err(E2Error::DigestMismatch {
                            expected: expected.clone(),
                            got: slice_digest,
                        });
                    }
                }
                let report = KpmReport { round, records };
                let allocation = policy.decide(&report);
                match transport.send(&E2Message::SliceCommand { round, allocation }) {
                    Ok(()) => {}
                    Err(E2Error::Closed) => break,
                    Err(e) => return Err(e),
                }
                summary.decision_times.push(at.elapsed());
                summary.decisions += 1;
                policy.idle();
            }
            E2Message::Bye {} => break,
            other => debug!(kind = other.kind(), "ignored message"),
        }
    }
    Ok(summary)
}
