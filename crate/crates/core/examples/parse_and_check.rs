//! Parse coefficient expressions and check the structural hypotheses.

use thinspec::expr::{check_hypotheses, parse, CoefficientProblem};

fn main() -> thinspec::error::Result<()> {
    let rho = parse("cos(2*pi*y1) - (0.5 + 0.3*x1^2)")?;
    println!("rho = {rho}");
    println!("rho(0.5, 0, 0) = {}", rho.eval(0.5, 0.0, 0.0)?);

    let samples: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
    for name in CoefficientProblem::builtin_names() {
        let p = CoefficientProblem::builtin(name).unwrap();
        let r = check_hypotheses(&p, &samples, 64)?;
        println!(
            "{name:<14} ellipticity {:.3}  H2 {:?} H3 {:?} H4 {:?} H5 {:?}",
            r.ellipticity_lower_bound, r.h2, r.h3, r.h4, r.h5
        );
    }

    let bad = CoefficientProblem::from_strs("positive", "1", "cos(2*pi*y1) + 0.5")?;
    let r = check_hypotheses(&bad, &samples, 64)?;
    println!("positive-average weight: H5 {:?} ({})", r.h5, r.require().unwrap_err());
    Ok(())
}
