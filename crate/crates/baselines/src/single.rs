use xslice_core::{Allocation, KpmReport, SlicingPolicy};

/// The whole band as one pooled grant; slice boundaries disappear for
/// scheduling and the RAN runs proportional fair over all sessions.
pub fn single_slice_alloc(n_rb: u32) -> Allocation {
    Allocation::pooled(n_rb)
}

#[derive(Debug, Clone)]
pub struct SingleSlice {
    n_rb: u32,
}

impl SingleSlice {
    pub fn new(n_rb: u32) -> Self {
        Self { n_rb }
    }
}

impl SlicingPolicy for SingleSlice {
    fn name(&self) -> &str {
        "single-slice"
    }

    fn decide(&mut self, _report: &KpmReport) -> Allocation {
        single_slice_alloc(self.n_rb)
    }
}
