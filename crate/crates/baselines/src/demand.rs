use xslice_core::{largest_remainder, Allocation, CoreError, KpmReport, SliceSpec, SlicingPolicy};

/// Aggregate throughput demand per slice: `P_k` times the number of the
/// slice's sessions present in `report`.
pub fn slice_demands(specs: &[SliceSpec], report: &KpmReport) -> Vec<f64> {
    let mut out = vec![0.0; specs.len()];
    for r in &report.records {
        if let Some(spec) = specs.get(r.slice_id) {
            out[r.slice_id] += spec.throughput_mbps;
        }
    }
    out
}

/// PRBs proportional to aggregate demand, each slice keeping `min_prb`.
pub fn prop_demand_alloc(
    demands: &[f64],
    n_rb: u32,
    min_prb: u32,
) -> Result<Allocation, CoreError> {
    Ok(Allocation::from_counts(&largest_remainder(
        demands, n_rb, min_prb,
    )?))
}

#[derive(Debug, Clone)]
pub struct PropDemand {
    specs: Vec<SliceSpec>,
    n_rb: u32,
    min_prb: u32,
}

impl PropDemand {
    pub fn new(specs: Vec<SliceSpec>, n_rb: u32, min_prb: u32) -> Result<Self, CoreError> {
        // Fails early on an infeasible floor.
        largest_remainder(&vec![1.0; specs.len()], n_rb, min_prb)?;
        Ok(Self {
            specs,
            n_rb,
            min_prb,
        })
    }
}

impl SlicingPolicy for PropDemand {
    fn name(&self) -> &str {
        "prop-demand"
    }

    fn decide(&mut self, report: &KpmReport) -> Allocation {
        let demands = slice_demands(&self.specs, report);
        prop_demand_alloc(&demands, self.n_rb, self.min_prb).expect("floor checked at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportional_examples() {
        assert_eq!(
            prop_demand_alloc(&[100.0, 100.0], 100, 1).unwrap().counts(),
            vec![50, 50]
        );
        assert_eq!(
            prop_demand_alloc(&[300.0, 100.0], 100, 1).unwrap().counts(),
            vec![75, 25]
        );
        let c = prop_demand_alloc(&[1.0, 1.0, 1.0], 100, 1)
            .unwrap()
            .counts();
        assert!(c.iter().sum::<u32>() <= 100);
        assert!(c.iter().max().unwrap() - c.iter().min().unwrap() <= 1);
    }

    #[test]
    fn no_demand_splits_evenly() {
        assert_eq!(
            prop_demand_alloc(&[0.0, 0.0], 10, 1).unwrap().counts(),
            vec![5, 5]
        );
    }
}
