//! Channel evolution and link abstraction: SNR -> CQI -> MCS -> BLER and
//! per-PRB capacity.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Spectral efficiency (bits per resource element) per CQI index.
pub const CQI_EFFICIENCY: [f64; 16] = [
    0.0, 0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223,
    3.9023, 4.5234, 5.1152, 5.5547,
];

pub const SUBCARRIERS_PER_PRB: f64 = 12.0;
pub const SYMBOLS_PER_SLOT: f64 = 14.0;
/// Slot duration at 30 kHz subcarrier spacing.
pub const SLOT_MS: f64 = 0.5;

/// Link-level constants shared by every session of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkModel {
    /// Innovation standard deviation of the AR(1) SNR process, dB.
    pub noise_std_db: f64,
    /// BLER threshold at MCS 0; the threshold grows 1.1 dB per MCS step.
    pub bler_offset_db: f64,
    /// Width of the logistic BLER curve, dB.
    pub bler_slope_db: f64,
    /// Fraction of resource elements lost to reference signals and control.
    pub overhead: f64,
    /// Fraction of slots carrying downlink data.
    pub dl_fraction: f64,
    /// Spatial layers multiplexed on each PRB.
    pub layers: u32,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            noise_std_db: 1.5,
            bler_offset_db: -6.8,
            bler_slope_db: 1.5,
            overhead: 0.14,
            dl_fraction: 0.7,
            layers: 1,
        }
    }
}

impl LinkModel {
    pub fn bler_threshold_db(&self, mcs: u8) -> f64 {
        self.bler_offset_db + 1.1 * f64::from(mcs)
    }

    pub fn bler_probability(&self, snr_db: f64, mcs: u8) -> f64 {
        1.0 / (1.0 + ((snr_db - self.bler_threshold_db(mcs)) / self.bler_slope_db).exp())
    }

    pub fn slots_per_round(&self, round_ms: f64) -> f64 {
        round_ms / SLOT_MS
    }
}

/// `clamp(floor((snr + 6) / 2.2), 0, 15)`.
pub fn snr_to_cqi(snr_db: f64) -> u8 {
    if snr_db.is_nan() {
        return 0;
    }
    ((snr_db + 6.0) / 2.2).floor().clamp(0.0, 15.0) as u8
}

/// MCS chosen for a CQI: `min(28, 2 cqi - 2)`, floored at 0.
pub fn cqi_to_mcs(cqi: u8) -> u8 {
    (2 * i32::from(cqi) - 2).clamp(0, 28) as u8
}

/// Table lookup; panics on an index above 15.
pub fn cqi_to_efficiency(cqi: u8) -> f64 {
    assert!(cqi <= 15, "CQI index {cqi} out of range 0..=15");
    CQI_EFFICIENCY[cqi as usize]
}

/// Bits one PRB carries over a round of `round_ms`.
pub fn prb_capacity_bits(efficiency: f64, round_ms: f64, link: &LinkModel) -> f64 {
    efficiency
        * SUBCARRIERS_PER_PRB
        * SYMBOLS_PER_SLOT
        * link.slots_per_round(round_ms)
        * link.dl_fraction
        * (1.0 - link.overhead)
        * f64::from(link.layers)
}

/// Gauss-Markov SNR state of one session plus the derived link quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub snr_db: f64,
    pub mean_snr_db: f64,
    pub correlation: f64,
    pub cqi: u8,
    pub mcs: u8,
    pub bler_prob: f64,
}

impl ChannelState {
    /// Starts the process at its mean.
    pub fn new(mean_snr_db: f64, correlation: f64, link: &LinkModel) -> Self {
        Self::at(mean_snr_db, mean_snr_db, correlation, link)
    }

    pub fn at(snr_db: f64, mean_snr_db: f64, correlation: f64, link: &LinkModel) -> Self {
        let cqi = snr_to_cqi(snr_db);
        let mcs = cqi_to_mcs(cqi);
        Self {
            snr_db,
            mean_snr_db,
            correlation,
            cqi,
            mcs,
            bler_prob: link.bler_probability(snr_db, mcs),
        }
    }

    pub fn efficiency(&self) -> f64 {
        cqi_to_efficiency(self.cqi)
    }
}

/// One AR(1) step: `snr' = mean + rho (snr - mean) + sigma xi`.
pub fn step_channel<R: Rng + ?Sized>(
    state: &ChannelState,
    link: &LinkModel,
    rng: &mut R,
) -> ChannelState {
    debug_assert!((0.0..1.0).contains(&state.correlation));
    let xi: f64 = rng.sample(StandardNormal);
    let snr = state.mean_snr_db
        + state.correlation * (state.snr_db - state.mean_snr_db)
        + link.noise_std_db * xi;
    ChannelState::at(snr, state.mean_snr_db, state.correlation, link)
}
