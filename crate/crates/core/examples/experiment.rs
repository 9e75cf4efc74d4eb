// A small epsilon sweep through the experiment harness, written as CSV.

use edge_slicing::evalcli::{run_experiment, write_csv, ExperimentSpec};

const CONFIG: &str = r#"
study = "epsilon_sweep"
solvers = ["oesp", "vesp"]
clusters = 3
nodes = [12]
requests = [6]
epsilon = [0.0, 0.02, 0.1]
replications = 2
seed = 1
"#;

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ExperimentSpec::from_toml(CONFIG)?;
    let rows = run_experiment(&spec)?;
    write_csv(std::io::stdout(), &rows, spec.wall_time)?;
    assert_eq!(rows.len(), 2 * (1 + 3));
    assert!(rows.iter().all(|r| r.max_violation <= 1e-6));
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
