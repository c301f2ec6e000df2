//! Rod eigenvalues over a sweep of ε compared with the two-term prediction.
//! Pass a directory to also write the JSON report and CSV tables.

use thinspec::expr::CoefficientProblem;
use thinspec::finescale::{sweep, SweepConfig};

fn main() -> thinspec::error::Result<()> {
    let p = CoefficientProblem::builtin("P_LOC").unwrap();
    let report = sweep(&p, &SweepConfig::default())?;
    println!("mu0 = {:.6}, nu = {:.6?}", report.model.mu0, report.nu);
    println!(
        "{:>8} {:>14} {:>14} {:>12} {:>12} {:>10} {:>10}",
        "eps", "lambda1", "predicted", "eps2 err", "eps err", "factor.", "ratio"
    );
    for r in &report.results {
        let row = &r.eigen[0];
        println!(
            "{:>8.5} {:>14.4} {:>14.4} {:>12.6} {:>12.6} {:>10.5} {:>10.5}",
            r.eps,
            row.lambda,
            row.predicted,
            row.leading_error,
            row.first_order_error,
            row.factorization.map(|f| f.scaled).unwrap_or(f64::NAN),
            r.averaging.ratio
        );
    }
    if let Some(dir) = std::env::args_os().nth(1) {
        report.write(std::path::Path::new(&dir))?;
    }
    Ok(())
}
