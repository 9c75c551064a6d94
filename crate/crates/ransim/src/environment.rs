use xslice_core::{Allocation, KpmReport, SliceSpec};

use crate::{BanditEnv, RanEnv, RanError};

/// Common surface of the environments a slicing policy can be run against.
pub trait Environment {
    fn specs(&self) -> &[SliceSpec];

    fn n_rb(&self) -> u32;

    /// Report describing the state before the first round.
    fn initial_report(&self) -> KpmReport;

    /// Plays one round under `alloc`.
    fn play(&mut self, alloc: &Allocation) -> Result<KpmReport, RanError>;

    /// Whether `alloc` would be accepted by [`Environment::play`].
    fn check(&self, alloc: &Allocation) -> Result<(), RanError> {
        alloc
            .validate(self.n_rb())
            .map_err(|e| RanError::Protocol(e.to_string()))?;
        let k = self.specs().len();
        if !alloc.pooled && alloc.grants.len() != k {
            return Err(RanError::Protocol(format!(
                "allocation carries {} grants for {k} slices",
                alloc.grants.len()
            )));
        }
        Ok(())
    }
}

impl Environment for RanEnv {
    fn specs(&self) -> &[SliceSpec] {
        self.slices()
    }

    fn n_rb(&self) -> u32 {
        RanEnv::n_rb(self)
    }

    fn initial_report(&self) -> KpmReport {
        RanEnv::initial_report(self)
    }

    fn play(&mut self, alloc: &Allocation) -> Result<KpmReport, RanError> {
        self.ran_round(alloc)
    }
}

impl Environment for BanditEnv {
    fn specs(&self) -> &[SliceSpec] {
        BanditEnv::specs(self)
    }

    fn n_rb(&self) -> u32 {
        BanditEnv::n_rb(self)
    }

    fn initial_report(&self) -> KpmReport {
        BanditEnv::initial_report(self)
    }

    fn play(&mut self, alloc: &Allocation) -> Result<KpmReport, RanError> {
        self.step(alloc)
    }
}
