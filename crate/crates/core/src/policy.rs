use crate::types::{Allocation, KpmReport};

/// Anything that turns the latest KPM report into the next allocation.
pub trait SlicingPolicy {
    fn name(&self) -> &str;

    /// Called once per round with the report of the round just played.
    fn decide(&mut self, report: &KpmReport) -> Allocation;

    /// Lets policies do deferred work while no report is pending.
    fn idle(&mut self) {}
}
