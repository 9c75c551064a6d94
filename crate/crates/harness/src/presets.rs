//! Built-in scenarios.

use xslice_core::{RegretWeights, SchedulerKind, SliceSpec};
use xslice_ransim::{DemandSpec, LinkModel, Scenario, SessionTemplate, TrafficClass};

use crate::error::HarnessError;

pub const PRESETS: [&str; 4] = ["light", "medium", "intensive", "starvation"];

/// Band and link used by every preset: 273 PRBs (100 MHz at 30 kHz) with
/// four spatial layers and an all-downlink frame.
pub fn preset_link() -> LinkModel {
    LinkModel {
        layers: 4,
        dl_fraction: 1.0,
        ..LinkModel::default()
    }
}

pub const PRESET_N_RB: u32 = 273;

/// Queue discard timer of the presets.
pub const DISCARD_MS: f64 = 300.0;

/// eMBB-like, URLLC-like and mMTC-like slices.
pub fn standard_slices() -> Vec<SliceSpec> {
    let w = RegretWeights::default();
    vec![
        SliceSpec::new(0, 100.0, 100.0, 0.1, w)
            .unwrap()
            .with_name("embb"),
        SliceSpec::new(1, 40.0, 60.0, 0.1, w)
            .unwrap()
            .with_name("urllc")
            .with_scheduler(SchedulerKind::EarliestDeadlineFirst),
        SliceSpec::new(2, 20.0, 300.0, 0.2, w)
            .unwrap()
            .with_name("mmtc")
            .with_scheduler(SchedulerKind::RoundRobin),
    ]
}

/// (slice, mean SNR dB) of the ten standard sessions.
pub const STANDARD_SESSIONS: [(usize, f64); 10] = [
    (0, 26.0),
    (0, 22.0),
    (0, 18.0),
    (0, 24.0),
    (1, 25.0),
    (1, 20.0),
    (1, 16.0),
    (2, 21.0),
    (2, 14.0),
    (2, 19.0),
];

fn traffic_preset(name: &str, class: TrafficClass, seed: u64, rounds: u64) -> Scenario {
    Scenario {
        name: name.into(),
        seed,
        rounds,
        round_ms: 100.0,
        n_rb: PRESET_N_RB,
        traffic_class: class,
        demand_hold_rounds: 50.0,
        pf_beta: 0.1,
        discard_ms: Some(DISCARD_MS),
        link: preset_link(),
        slices: standard_slices(),
        sessions: STANDARD_SESSIONS
            .iter()
            .map(|&(slice, snr)| SessionTemplate::new(slice, snr, DemandSpec::Class))
            .collect(),
        events: Vec::new(),
    }
}

/// The standard slices and sessions on a 40 MHz band (106 PRBs), where
/// keeping five PRBs per session takes about half of the band.
fn starvation(seed: u64, rounds: u64) -> Scenario {
    Scenario {
        name: "starvation".into(),
        seed,
        rounds,
        round_ms: 100.0,
        n_rb: STARVATION_N_RB,
        traffic_class: TrafficClass::Custom,
        demand_hold_rounds: 50.0,
        pf_beta: 0.1,
        discard_ms: Some(DISCARD_MS),
        link: preset_link(),
        slices: standard_slices(),
        sessions: STANDARD_SESSIONS
            .iter()
            .map(|&(slice, snr)| {
                SessionTemplate::new(
                    slice,
                    snr,
                    DemandSpec::Uniform {
                        min_mbps: 20.0,
                        max_mbps: 60.0,
                    },
                )
            })
            .collect(),
        events: Vec::new(),
    }
}

pub const STARVATION_N_RB: u32 = 106;

pub fn preset(name: &str, seed: u64, rounds: u64) -> Option<Scenario> {
    Some(match name {
        "light" => traffic_preset(name, TrafficClass::Light, seed, rounds),
        "medium" => traffic_preset(name, TrafficClass::Medium, seed, rounds),
        "intensive" => traffic_preset(name, TrafficClass::Intensive, seed, rounds),
        "starvation" => starvation(seed, rounds),
        _ => return None,
    })
}

/// Resolves a preset name or loads a scenario file; seed and round count
/// come from the experiment.
pub fn load_scenario(source: &str, seed: u64, rounds: u64) -> Result<Scenario, HarnessError> {
    if let Some(s) = preset(source, seed, rounds) {
        s.validate()?;
        return Ok(s);
    }
    let mut s = Scenario::load(source).map_err(|e| match e {
        xslice_ransim::RanError::Io(io) => HarnessError::Config(format!(
            "`{source}` is neither a preset ({}) nor a readable file: {io}",
            PRESETS.join(", ")
        )),
        other => HarnessError::Config(format!("{source}: {other}")),
    })?;
    s.seed = seed;
    s.rounds = rounds;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_have_ten_sessions() {
        for name in ["light", "medium", "intensive"] {
            let s = preset(name, 1, 10).unwrap();
            s.validate().unwrap();
            assert_eq!(s.sessions.len(), 10);
            assert_eq!(s.slices.len(), 3);
        }
        preset("starvation", 1, 10).unwrap().validate().unwrap();
        assert!(preset("heavy", 1, 10).is_none());
    }

    #[test]
    fn traffic_ranges() {
        let range = |n| preset(n, 1, 1).unwrap().traffic_class.range_mbps().unwrap();
        assert_eq!(range("light"), (20.0, 80.0));
        assert_eq!(range("medium"), (80.0, 160.0));
        assert_eq!(range("intensive"), (160.0, 220.0));
    }
}
