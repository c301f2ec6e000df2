//! Effective coefficients at x₁ = 0, with both weightings of the diffusion.

use thinspec::cell::{build_effective_model, AeffWeighting, EffectiveConfig};
use thinspec::expr::CoefficientProblem;

fn main() -> thinspec::error::Result<()> {
    for name in ["P_LOC", "P_TILT", "P_MATRIX"] {
        let p = CoefficientProblem::builtin(name).unwrap();
        for weighting in [AeffWeighting::PsiSquared, AeffWeighting::Unweighted] {
            let cfg = EffectiveConfig {
                weighting,
                ..EffectiveConfig::default()
            };
            let m = build_effective_model(&p, &cfg)?;
            println!(
                "{name:<9} {weighting:<10?} mu0 {:.6}  mu2 {:.4}  a_eff {:.6}  c_eff {:+.6}  <rho_Psi> {:.3}",
                m.mu0, m.mu2, m.a_eff, m.c_eff, m.rho_psi_avg
            );
        }
    }

    let err = build_effective_model(&CoefficientProblem::builtin("P_CONST").unwrap(), &EffectiveConfig::default())
        .unwrap_err();
    println!("P_CONST: {err}");
    Ok(())
}
