//! Coupling-aware slicing of networking, storage and compute resources on
//! clustered, MEC-enabled edge infrastructure.
//!
//! Every edge node carries a collateral matrix: allocating `x` units of one
//! resource type consumes a proportional amount of the other two. The crate
//! formulates admission and allocation of slice requests as a mixed-integer
//! program and offers three ways to solve it:
//!
//! * [`exact`]: branch-and-bound to proven optimality,
//! * [`vesp`]: aggregation of similar nodes into virtual nodes, a reduced
//!   exact solve, and per-partition disaggregation,
//! * [`dcesp`]: consensus ADMM in which every cluster solves only its own
//!   subproblem.
//!
//! [`evalcli`] holds a coupling-blind baseline and the experiment harness;
//! [`scenario`] generates and persists seeded test instances.

pub mod dcesp;
pub mod evalcli;
pub mod exact;
pub mod linprog;
pub mod model;
pub mod scenario;
pub mod vesp;

pub use model::{
    collateral_consumption, validate_solution, CollateralMatrix, EdgeNode, Infrastructure, ResourceType,
    ResourceVector, SliceRequest, SlicingSolution, SolverStats, ValidationReport, ValueMode,
};
