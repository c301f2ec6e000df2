//! Principal cell eigenvalue μ(x₁) and its derivative along the rod.

use thinspec::cell::{mu_prime, mu_values};
use thinspec::expr::CoefficientProblem;
use thinspec::fem::CellGrid;

fn main() -> thinspec::error::Result<()> {
    let p = CoefficientProblem::builtin("P_LOC").unwrap();
    let grid = CellGrid::new(64, 16)?;
    let xs: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
    println!("{:>6} {:>12} {:>12} {:>10}", "x1", "mu", "mu'", "min Psi");
    for pair in mu_values(&p, &grid, &xs)? {
        println!(
            "{:>6.2} {:>12.6} {:>12.6} {:>10.3e}",
            pair.x1,
            pair.mu,
            mu_prime(&p, &pair)?,
            pair.min_psi
        );
    }
    Ok(())
}
