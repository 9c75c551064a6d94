use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub bytes: u64,
    pub arrival_round: u64,
}

/// Per-session FIFO of byte batches stamped with their arrival round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PacketQueue {
    packets: VecDeque<Packet>,
    bytes: u64,
}

impl PacketQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: u64, arrival_round: u64) {
        if bytes == 0 {
            return;
        }
        debug_assert!(self
            .packets
            .back()
            .is_none_or(|p| p.arrival_round <= arrival_round));
        match self.packets.back_mut() {
            Some(last) if last.arrival_round == arrival_round => last.bytes += bytes,
            _ => self.packets.push_back(Packet {
                bytes,
                arrival_round,
            }),
        }
        self.bytes += bytes;
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn is_empty(&self) -> bool {
        self.bytes == 0
    }

    pub fn packets(&self) -> impl Iterator<Item = &Packet> {
        self.packets.iter()
    }

    /// Arrival round of the byte at `offset` from the head, if queued.
    pub fn arrival_at(&self, offset: u64) -> Option<u64> {
        let mut seen = 0;
        for p in &self.packets {
            seen += p.bytes;
            if offset < seen {
                return Some(p.arrival_round);
            }
        }
        None
    }

    pub fn head_arrival(&self) -> Option<u64> {
        self.packets.front().map(|p| p.arrival_round)
    }

    /// Removes up to `n` bytes from the head, returning the removed chunks in
    /// FIFO order.
    pub fn pop_bytes(&mut self, mut n: u64) -> Vec<Packet> {
        let mut out = Vec::new();
        while n > 0 {
            let Some(front) = self.packets.front_mut() else {
                break;
            };
            let take = front.bytes.min(n);
            out.push(Packet {
                bytes: take,
                arrival_round: front.arrival_round,
            });
            front.bytes -= take;
            n -= take;
            self.bytes -= take;
            if front.bytes == 0 {
                self.packets.pop_front();
            }
        }
        out
    }

    /// Drops every packet that arrived before `round`, returning the bytes
    /// dropped.
    pub fn drop_arrived_before(&mut self, round: u64) -> u64 {
        let mut dropped = 0;
        while let Some(front) = self.packets.front() {
            if front.arrival_round >= round {
                break;
            }
            dropped += front.bytes;
            self.packets.pop_front();
        }
        self.bytes -= dropped;
        dropped
    }

    /// Empties the queue, returning the number of bytes dropped.
    pub fn clear(&mut self) -> u64 {
        let dropped = self.bytes;
        self.packets.clear();
        self.bytes = 0;
        dropped
    }
}
