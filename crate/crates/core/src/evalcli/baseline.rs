use crate::exact::{build_esp, solve_exact, ExactConfig, ExactError};
use crate::model::{
    validate_solution, CollateralMatrix, Infrastructure, NodeId, ResourceType, SliceRequest, SlicingSolution,
    ValueMode,
};

#[derive(Debug, Clone, PartialEq)]
pub struct OverProvisionEntry {
    pub node: NodeId,
    pub rtype: ResourceType,
    pub consumption: f64,
    pub capacity: f64,
    /// `consumption / capacity`; infinite when a zero capacity is used.
    pub ratio: f64,
}

/// True consumption of a coupling-blind allocation, per node and type.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OverProvisionReport {
    pub entries: Vec<OverProvisionEntry>,
}

impl OverProvisionReport {
    pub fn max_ratio(&self) -> f64 {
        self.entries.iter().map(|e| e.ratio).fold(0.0, f64::max)
    }

    /// Entries whose ratio exceeds 1 by more than `tol`.
    pub fn over_provisioned(&self, tol: f64) -> impl Iterator<Item = &OverProvisionEntry> + '_ {
        self.entries.iter().filter(move |e| e.ratio > 1.0 + tol)
    }
}

/// The same infrastructure with every collateral matrix set to identity.
pub fn coupling_blind(infra: &Infrastructure) -> Infrastructure {
    infra.map_collateral(|_| CollateralMatrix::identity())
}

/// Solves optimally while ignoring collateral coupling, then measures the
/// allocation under the true collateral matrices.
pub fn baseline_coupling_blind(
    infra: &Infrastructure,
    requests: &[SliceRequest],
    mode: ValueMode,
    cfg: &ExactConfig,
) -> Result<(SlicingSolution, OverProvisionReport), ExactError> {
    let blind = coupling_blind(infra);
    let solution = solve_exact(&build_esp(&blind, requests, mode)?, cfg)?;
    let truth = validate_solution(infra, requests, &solution)?;
    let entries = truth
        .capacity
        .iter()
        .map(|c| OverProvisionEntry {
            node: c.node,
            rtype: c.rtype,
            consumption: c.consumption,
            capacity: c.capacity,
            ratio: if c.capacity > 0.0 {
                c.consumption / c.capacity
            } else if c.consumption > 0.0 {
                f64::INFINITY
            } else {
                0.0
            },
        })
        .collect();
    Ok((solution, OverProvisionReport { entries }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EdgeNode, ResourceVector};
    use crate::scenario::base_collateral;

    #[test]
    fn identity_truth_is_never_exceeded() {
        let infra = Infrastructure::new(vec![vec![
            EdgeNode::new(1, 0, ResourceVector::new(50.0, 1000.0, 40.0), CollateralMatrix::identity()),
            EdgeNode::new(2, 0, ResourceVector::new(50.0, 500.0, 80.0), CollateralMatrix::identity()),
        ]])
        .unwrap();
        let reqs = vec![
            SliceRequest::new(1, ResourceType::Networking, 1.0, vec![90.0]).unwrap(),
            SliceRequest::new(2, ResourceType::Compute, 1.0, vec![100.0]).unwrap(),
            SliceRequest::new(3, ResourceType::Storage, 1.0, vec![1200.0]).unwrap(),
        ];
        let (sol, report) = baseline_coupling_blind(&infra, &reqs, ValueMode::Count, &ExactConfig::default()).unwrap();
        assert_eq!(sol.admitted_count(), 3);
        assert!(report.max_ratio() <= 1.0 + 1e-9);
        assert_eq!(report.over_provisioned(1e-9).count(), 0);
    }

    #[test]
    fn networking_slice_overloads_compute() {
        // 50 RB * 0.49 GIPS/RB = 24.5 GIPS on a 20-GIPS node
        let infra = Infrastructure::new(vec![vec![EdgeNode::new(
            1,
            0,
            ResourceVector::new(50.0, 1e6, 20.0),
            base_collateral(),
        )]])
        .unwrap();
        let reqs = vec![SliceRequest::new(1, ResourceType::Networking, 1.0, vec![50.0]).unwrap()];
        let (sol, report) = baseline_coupling_blind(&infra, &reqs, ValueMode::Count, &ExactConfig::default()).unwrap();
        assert!(sol.is_admitted(1));
        let compute = report
            .entries
            .iter()
            .find(|e| e.rtype == ResourceType::Compute)
            .unwrap();
        assert!((compute.consumption - 24.5).abs() < 1e-6);
        assert!((compute.ratio - 1.225).abs() < 1e-6);
        assert!((report.max_ratio() - 1.225).abs() < 1e-6);
    }
}
