//! Stateless two-slice environment: one slice carries a single
//! deadline-bound session, the other is empty. Traffic not served within
//! its round expires, so each round's outcome depends only on that round's
//! allocation and channel draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xslice_core::{Allocation, KpmRecord, KpmReport, RegretWeights, SliceSpec};

use crate::error::RanError;
use crate::kpm::synthetic_phr_db;
use crate::link::{prb_capacity_bits, step_channel, ChannelState, LinkModel};

#[derive(Debug, Clone, PartialEq)]
pub struct BanditConfig {
    pub n_rb: u32,
    /// Offered rate and throughput demand of the busy slice, Mbps.
    pub demand_mbps: f64,
    pub mean_snr_db: f64,
    pub round_ms: f64,
    pub link: LinkModel,
    pub seed: u64,
}

impl BanditConfig {
    /// 50 PRBs, 100 Mbps over a static channel; the busy slice needs 45
    /// PRBs (90% of the band).
    pub fn new(seed: u64) -> Self {
        Self {
            n_rb: 50,
            demand_mbps: 100.0,
            mean_snr_db: 30.0,
            round_ms: 100.0,
            link: LinkModel {
                layers: 2,
                noise_std_db: 0.0,
                ..LinkModel::default()
            },
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BanditEnv {
    cfg: BanditConfig,
    specs: Vec<SliceSpec>,
    channel: ChannelState,
    rng: ChaCha8Rng,
    round: u64,
}

impl BanditEnv {
    pub fn new(cfg: BanditConfig) -> Self {
        let specs = vec![
            SliceSpec::new(0, cfg.demand_mbps, 100.0, 0.1, RegretWeights::default())
                .expect("valid demand"),
            SliceSpec::new(1, 10.0, 100.0, 0.1, RegretWeights::default()).expect("valid demand"),
        ];
        Self {
            channel: ChannelState::new(cfg.mean_snr_db, 0.9, &cfg.link),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            specs,
            cfg,
            round: 0,
        }
    }

    pub fn specs(&self) -> &[SliceSpec] {
        &self.specs
    }

    pub fn n_rb(&self) -> u32 {
        self.cfg.n_rb
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    fn prb_bits(&self) -> f64 {
        prb_capacity_bits(self.channel.efficiency(), self.cfg.round_ms, &self.cfg.link)
    }

    /// Smallest grant that carries the full offered load on the current
    /// channel, ignoring block errors.
    pub fn prbs_needed(&self) -> u32 {
        let offered = self.cfg.demand_mbps * self.cfg.round_ms * 1000.0;
        (offered / self.prb_bits()).ceil() as u32
    }

    fn record(
        &self,
        scheduled: u32,
        used: u32,
        mbps: f64,
        delay: f64,
        bler: f64,
        queued: u64,
    ) -> KpmRecord {
        let slots = self.cfg.link.slots_per_round(self.cfg.round_ms);
        KpmRecord {
            throughput_mbps: mbps,
            delay_ms: delay,
            bler,
            prbs_used: used,
            pusch_snr_db: self.channel.snr_db,
            phr_db: synthetic_phr_db(self.channel.snr_db),
            mcs: self.channel.mcs,
            current_tbs: (self.prb_bits() / 8.0 / slots).floor() as u32,
            scheduled_rbs: scheduled,
            queue_bytes: queued,
            ..KpmRecord::idle(0, 0)
        }
    }

    pub fn initial_report(&self) -> KpmReport {
        KpmReport {
            round: self.round,
            records: vec![self.record(0, 0, 0.0, 0.0, 0.0, 0)],
        }
    }

    /// Plays one round. Expected values are reported (no block sampling):
    /// served bits are `min(offered, n * prb_bits)`, of which the BLER share
    /// is lost; served bytes leave uniformly over the busy part of the round.
    pub fn step(&mut self, alloc: &Allocation) -> Result<KpmReport, RanError> {
        alloc
            .validate(self.cfg.n_rb)
            .map_err(|e| RanError::Protocol(e.to_string()))?;
        let n = if alloc.pooled {
            self.cfg.n_rb
        } else if alloc.grants.len() == self.specs.len() {
            alloc.grants[0].num_prb
        } else {
            return Err(RanError::Protocol(format!(
                "allocation carries {} grants for {} slices",
                alloc.grants.len(),
                self.specs.len()
            )));
        };
        self.channel = step_channel(&self.channel, &self.cfg.link, &mut self.rng);
        let per_prb = self.prb_bits();
        let offered = self.cfg.demand_mbps * self.cfg.round_ms * 1000.0;
        let capacity = f64::from(n) * per_prb;
        let served = offered.min(capacity);
        let bler = self.channel.bler_prob;
        let delivered = served * (1.0 - bler);
        let busy = if capacity > 0.0 {
            served / capacity
        } else {
            1.0
        };
        let used = if per_prb > 0.0 {
            (served / per_prb).ceil() as u32
        } else {
            0
        };
        let rec = self.record(
            n,
            used.min(n),
            delivered / (self.cfg.round_ms * 1000.0),
            busy * self.cfg.round_ms / 2.0,
            bler,
            ((offered - served) / 8.0).round() as u64,
        );
        self.round += 1;
        Ok(KpmReport {
            round: self.round - 1,
            records: vec![rec],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn throughput_grows_with_grant_until_demand_is_met() {
        let cfg = BanditConfig::new(1);
        let mut last = 0.0;
        for n in [5, 15, 30, 45] {
            let mut env = BanditEnv::new(cfg.clone());
            let rep = env.step(&Allocation::from_counts(&[n, 50 - n])).unwrap();
            let r = &rep.records[0];
            assert!(r.throughput_mbps > last);
            assert!(r.delay_ms <= 50.0 + 1e-9);
            last = r.throughput_mbps;
        }
        let mut env = BanditEnv::new(cfg.clone());
        let full = env.step(&Allocation::from_counts(&[49, 1])).unwrap();
        assert_eq!(full.records[0].throughput_mbps, last);
        let env = BanditEnv::new(cfg);
        // 100 Mbps over about 2.25 Mbps per PRB
        assert_eq!(env.prbs_needed(), 45);
        // about 1.8% of blocks fail at MCS 28 and 30 dB
        assert!(last > 97.0 && last < 100.0);
    }

    #[test]
    fn rejects_wrong_grant_count() {
        let mut env = BanditEnv::new(BanditConfig::new(1));
        assert!(env.step(&Allocation::from_counts(&[50])).is_err());
    }
}
