//! Sparse solvers against dense reference solves on small instances.

use thinspec::cell::cell_pencil;
use thinspec::eigen::dense::{dense_indefinite, DenseCellOracle};
use thinspec::eigen::{principal_positive, EigOptions};
use thinspec::expr::CoefficientProblem;
use thinspec::fem::CellGrid;
use thinspec::finescale::{assemble_rod, positive_spectrum, NormalizationRule, ResolutionPolicy};

fn main() -> thinspec::error::Result<()> {
    let p = CoefficientProblem::builtin("P_CONST").unwrap();
    let pencil = cell_pencil(&p, 0.0, &CellGrid::new(24, 24)?)?;
    let sparse = principal_positive(&pencil)?.mu;
    let dense = DenseCellOracle::new(&pencil.a, &pencil.b, &pencil.m)?.principal()?;
    println!("cell  {} DOF: mu sparse {sparse:.12}, dense {dense:.12}", pencil.dim());

    let p = CoefficientProblem::builtin("P_LOC").unwrap();
    let rod = assemble_rod(&p, 0.125, &ResolutionPolicy { per_period: 8, m2: 4 })?;
    let sparse = positive_spectrum(&rod, 3, NormalizationRule::Paper, &EigOptions::default())?;
    let dense = dense_indefinite(&rod.pencil.a, &rod.pencil.b)?;
    println!("rod   {} DOF", rod.dim());
    for (j, (s, d)) in sparse.values.iter().zip(&dense.positive).enumerate() {
        println!("  lambda_{} sparse {s:.10}, dense {d:.10}, rel {:.1e}", j + 1, (s - d).abs() / d);
    }
    println!("  largest negative eigenvalue {:.6}", dense.negative[0]);
    Ok(())
}
