//! Immutable parameter snapshots shared between the decision path and the
//! trainer.

use std::sync::Arc;

use arc_swap::ArcSwap;

use crate::policy::PolicyParams;

pub(crate) fn fnv_f64(values: impl IntoIterator<Item = f64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub version: u64,
    pub params: PolicyParams,
    pub checksum: u64,
}

impl Snapshot {
    pub fn new(version: u64, params: PolicyParams) -> Self {
        let checksum = fnv_f64(params.flatten());
        Self {
            version,
            params,
            checksum,
        }
    }

    /// Recomputes the checksum over the parameters.
    pub fn verify(&self) -> bool {
        fnv_f64(self.params.flatten()) == self.checksum
    }
}

/// Atomically replaceable snapshot slot.
#[derive(Debug)]
pub struct SnapshotCell {
    inner: ArcSwap<Snapshot>,
}

impl SnapshotCell {
    pub fn new(params: PolicyParams) -> Self {
        Self {
            inner: ArcSwap::from_pointee(Snapshot::new(0, params)),
        }
    }

    pub fn load(&self) -> Arc<Snapshot> {
        self.inner.load_full()
    }

    /// Publishes `params` as the next version and returns that version.
    pub fn publish(&self, params: PolicyParams) -> u64 {
        let version = self.inner.load().version + 1;
        self.inner.store(Arc::new(Snapshot::new(version, params)));
        version
    }
}
