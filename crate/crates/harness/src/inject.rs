//! Scenario events from short text specs.
//!
//! ```text
//! arrival@1000:slice=0,mbps=100,snr=20
//! departure@0:session=3
//! demand@500:session=2,mbps=120
//! ```

use std::collections::BTreeMap;

use xslice_ransim::{DemandSpec, Scenario, ScenarioEvent, SessionTemplate};

use crate::error::HarnessError;

const DEFAULT_ARRIVAL_SNR_DB: f64 = 20.0;

pub fn parse_event(spec: &str) -> Result<ScenarioEvent, HarnessError> {
    let fail = |reason: String| HarnessError::Event {
        spec: spec.to_string(),
        reason,
    };
    let (head, args) = spec.split_once(':').unwrap_or((spec, ""));
    let (kind, round) = head
        .split_once('@')
        .ok_or_else(|| fail("expected <kind>@<round>".into()))?;
    let round: u64 = round
        .trim()
        .parse()
        .map_err(|_| fail(format!("round `{round}` is not a nonnegative integer")))?;
    let mut kv = BTreeMap::new();
    for pair in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| fail(format!("`{pair}` is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| fail(format!("value of `{k}` is not a number")))?;
        kv.insert(k.trim().to_string(), v);
    }
    let mut take = |key: &str| kv.remove(key);
    let index = |v: Option<f64>, key: &str| -> Result<u64, HarnessError> {
        match v {
            Some(x) if x >= 0.0 && x.fract() == 0.0 => Ok(x as u64),
            Some(_) => Err(fail(format!("`{key}` must be a nonnegative integer"))),
            None => Err(fail(format!("missing `{key}`"))),
        }
    };
    let event = match kind.trim() {
        "arrival" => {
            let slice = index(take("slice"), "slice")? as usize;
            let snr = take("snr").unwrap_or(DEFAULT_ARRIVAL_SNR_DB);
            let demand = match (take("mbps"), take("min"), take("max")) {
                (Some(mbps), None, None) => DemandSpec::Constant { mbps },
                (None, Some(min_mbps), Some(max_mbps)) => {
                    DemandSpec::Uniform { min_mbps, max_mbps }
                }
                (None, None, None) => DemandSpec::Class,
                _ => return Err(fail("give either mbps or min and max".into())),
            };
            ScenarioEvent::SessionArrival {
                round,
                session: SessionTemplate::new(slice, snr, demand),
            }
        }
        "departure" => ScenarioEvent::SessionDeparture {
            round,
            session: index(take("session"), "session")? as u32,
        },
        "demand" => ScenarioEvent::DemandStep {
            round,
            session: index(take("session"), "session")? as u32,
            mbps: take("mbps").ok_or_else(|| fail("missing `mbps`".into()))?,
        },
        other => {
            return Err(fail(format!(
                "unknown event kind `{other}` (arrival, departure, demand)"
            )))
        }
    };
    if let Some(k) = kv.keys().next() {
        return Err(fail(format!("unknown key `{k}`")));
    }
    Ok(event)
}

/// Adds `event` to `scenario`, rejecting references to sessions that never
/// exist.
pub fn inject_event(scenario: &Scenario, event: ScenarioEvent) -> Result<Scenario, HarnessError> {
    let mut out = scenario.clone();
    out.events.push(event);
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_kind() {
        assert_eq!(
            parse_event("departure@0:session=3").unwrap(),
            ScenarioEvent::SessionDeparture {
                round: 0,
                session: 3
            }
        );
        assert_eq!(
            parse_event("demand@5:session=1,mbps=12.5").unwrap(),
            ScenarioEvent::DemandStep {
                round: 5,
                session: 1,
                mbps: 12.5
            }
        );
        match parse_event("arrival@1000:slice=2,mbps=100").unwrap() {
            ScenarioEvent::SessionArrival { round, session } => {
                assert_eq!(round, 1000);
                assert_eq!(session.slice, 2);
                assert_eq!(session.demand, DemandSpec::Constant { mbps: 100.0 });
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn rejects_garbage() {
        for bad in [
            "arrival",
            "arrival@x",
            "teleport@3",
            "departure@1",
            "departure@1:session=1.5",
            "demand@1:session=1",
            "arrival@1:slice=0,mbps=3,min=1",
            "departure@1:session=0,colour=2",
        ] {
            assert!(parse_event(bad).is_err(), "{bad}");
        }
    }
}
