// The bundled simplex solver on a textbook LP.
//
// maximize 3x + 5y  s.t.  x <= 4,  2y <= 12,  3x + 2y <= 18,  x, y >= 0

use edge_slicing::linprog::{find_feasible, solve_lp, LpProblem, LpStatus};

fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut lp = LpProblem::new(2);
    lp.set_objective(vec![3.0, 5.0])?;
    lp.add_le(vec![1.0, 0.0], 4.0)?;
    lp.add_le(vec![0.0, 2.0], 12.0)?;
    lp.add_le(vec![3.0, 2.0], 18.0)?;
    let res = solve_lp(&lp)?;
    println!("status {:?}, x = {:?}, objective {}, pivots {}", res.status, res.x, res.objective, res.pivots);
    assert_eq!(res.status, LpStatus::Optimal);
    assert!((res.objective - 36.0).abs() < 1e-9);

    lp.add_eq(vec![1.0, 1.0], 20.0)?;
    let infeasible = find_feasible(&lp)?;
    println!("with x + y = 20: {:?}", infeasible.status);
    assert_eq!(infeasible.status, LpStatus::Infeasible);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
