//! Coupling-blind baseline, experiment harness and command-line front end.

mod baseline;
mod cli;
mod experiment;

pub use baseline::{baseline_coupling_blind, coupling_blind, OverProvisionEntry, OverProvisionReport};
pub use cli::cli_main;
pub use experiment::{
    run_experiment, write_csv, ExperimentError, ExperimentRow, ExperimentSpec, SolverKind, Study, CSV_COLUMNS,
};
