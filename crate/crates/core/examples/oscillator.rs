//! Limit oscillator: closed form against the truncated finite element solver.

use thinspec::oscillator::{nu_closed_form, sign_changes, solve_truncated, OscillatorSpec};

fn main() -> thinspec::error::Result<()> {
    let spec = OscillatorSpec::new(0.8, 0.3, 2.5, 1.0)?;
    println!("theta = {:.6}, spacing = {:.6}", spec.theta(), spec.spacing());
    let sol = solve_truncated(&spec, None, 2000, 5)?;
    println!("half-width {} ({} elements)", sol.half_width, sol.elements);
    println!("{:>2} {:>14} {:>14} {:>10} {:>6}", "j", "closed form", "numeric", "rel err", "nodes");
    for j in 1..=5 {
        let exact = nu_closed_form(&spec, j);
        let num = sol.values[j - 1];
        println!(
            "{j:>2} {exact:>14.10} {num:>14.10} {:>10.2e} {:>6}",
            (num - exact).abs() / exact.abs(),
            sign_changes(&sol.vectors[j - 1])
        );
    }
    Ok(())
}
