//! KPM synthesis from one round of service.

use serde::{Deserialize, Serialize};
use xslice_core::{KpmRecord, DELAY_CAP_MS};

use crate::link::ChannelState;
use crate::queue::{Packet, PacketQueue};

/// Outcome of one round of scheduling and transmission for one session.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundService {
    pub scheduled_rbs: u32,
    pub prbs_used: u32,
    pub prb_bytes: u64,
    /// Bytes the scheduled PRBs could carry.
    pub capacity_bytes: u64,
    /// Bytes put on the air, `min(queue, capacity)`.
    pub attempted_bytes: u64,
    pub delivered_bytes: u64,
    /// Bytes in failed blocks; they stay queued.
    pub failed_bytes: u64,
    pub attempted_blocks: u64,
    pub failed_blocks: u64,
    /// Delivered chunks in FIFO order with their arrival rounds.
    pub delivered: Vec<Packet>,
}

impl RoundService {
    /// Byte-weighted mean sojourn of the delivered bytes, ms.
    ///
    /// Bytes arrive at the start of their round. Delivered bytes leave
    /// uniformly over the busy part of the round, whose length is the
    /// attempted share of the scheduled capacity.
    pub fn mean_sojourn_ms(&self, round: u64, round_ms: f64) -> Option<f64> {
        if self.delivered_bytes == 0 {
            return None;
        }
        let busy = if self.capacity_bytes == 0 {
            1.0
        } else {
            (self.attempted_bytes as f64 / self.capacity_bytes as f64).min(1.0)
        };
        let total = self.delivered_bytes as f64;
        let mut pos = 0.0;
        let mut acc = 0.0;
        for chunk in &self.delivered {
            let b = chunk.bytes as f64;
            let mid = (pos + b / 2.0) / total;
            let waited = (round - chunk.arrival_round) as f64 * round_ms;
            acc += b * (waited + mid * busy * round_ms);
            pos += b;
        }
        Some(acc / total)
    }
}

/// Builds the KPM record of a session after its round completed.
pub fn compute_kpm(
    session_id: u32,
    slice_id: usize,
    channel: &ChannelState,
    service: &RoundService,
    queue_after: &PacketQueue,
    round: u64,
    round_ms: f64,
    slots_per_round: f64,
) -> KpmRecord {
    let throughput_mbps = service.delivered_bytes as f64 * 8.0 / (round_ms * 1000.0);
    let delay_ms = match service.mean_sojourn_ms(round, round_ms) {
        Some(d) => d,
        None => queue_after
            .head_arrival()
            .map_or(0.0, |a| (round + 1 - a) as f64 * round_ms),
    }
    .min(DELAY_CAP_MS);
    let bler = if service.attempted_blocks == 0 {
        0.0
    } else {
        service.failed_blocks as f64 / service.attempted_blocks as f64
    };
    KpmRecord {
        session_id,
        slice_id,
        throughput_mbps,
        delay_ms,
        bler,
        prbs_used: service.prbs_used,
        pusch_snr_db: channel.snr_db,
        phr_db: synthetic_phr_db(channel.snr_db),
        mcs: channel.mcs,
        current_tbs: (service.prb_bytes as f64 / slots_per_round).floor() as u32,
        scheduled_rbs: service.scheduled_rbs,
        queue_bytes: queue_after.bytes(),
    }
}

/// Power headroom: 23 dBm UE power minus a path-loss proxy of `40 - SNR`.
pub fn synthetic_phr_db(snr_db: f64) -> f64 {
    23.0 - (40.0 - snr_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::LinkModel;
    use approx::assert_relative_eq;

    fn channel() -> ChannelState {
        ChannelState::new(20.0, 0.9, &LinkModel::default())
    }

    #[test]
    fn idle_session_reports_zeros() {
        let rec = compute_kpm(
            3,
            1,
            &channel(),
            &RoundService::default(),
            &PacketQueue::new(),
            5,
            100.0,
            200.0,
        );
        assert_eq!(rec.throughput_mbps, 0.0);
        assert_eq!(rec.delay_ms, 0.0);
        assert_eq!(rec.bler, 0.0);
        assert_eq!((rec.session_id, rec.slice_id), (3, 1));
    }

    #[test]
    fn delivered_bytes_convert_to_mbps() {
        let svc = RoundService {
            capacity_bytes: 2_500_000,
            attempted_bytes: 1_250_000,
            delivered_bytes: 1_250_000,
            delivered: vec![Packet {
                bytes: 1_250_000,
                arrival_round: 4,
            }],
            ..RoundService::default()
        };
        let rec = compute_kpm(0, 0, &channel(), &svc, &PacketQueue::new(), 4, 100.0, 200.0);
        assert_relative_eq!(rec.throughput_mbps, 100.0, epsilon = 1e-12);
        // half-busy round, bytes leave uniformly over the first 50 ms
        assert_relative_eq!(rec.delay_ms, 25.0, epsilon = 1e-9);
    }

    #[test]
    fn starved_session_reports_head_age() {
        let mut q = PacketQueue::new();
        q.push(1000, 7);
        q.push(1000, 8);
        q.push(1000, 9);
        let rec = compute_kpm(
            0,
            0,
            &channel(),
            &RoundService::default(),
            &q,
            9,
            100.0,
            200.0,
        );
        assert_eq!(rec.delay_ms, 300.0);
        let mut ancient = PacketQueue::new();
        ancient.push(1, 0);
        let rec = compute_kpm(
            0,
            0,
            &channel(),
            &RoundService::default(),
            &ancient,
            50,
            100.0,
            200.0,
        );
        assert_eq!(rec.delay_ms, DELAY_CAP_MS);
    }

    #[test]
    fn sojourn_counts_rounds_waited() {
        let svc = RoundService {
            capacity_bytes: 200,
            attempted_bytes: 200,
            delivered_bytes: 200,
            delivered: vec![
                Packet {
                    bytes: 100,
                    arrival_round: 2,
                },
                Packet {
                    bytes: 100,
                    arrival_round: 3,
                },
            ],
            ..RoundService::default()
        };
        // first half: 100 ms waited + 25 ms mid offset; second half: 0 + 75 ms
        assert_relative_eq!(
            svc.mean_sojourn_ms(3, 100.0).unwrap(),
            100.0,
            epsilon = 1e-9
        );
    }
}
