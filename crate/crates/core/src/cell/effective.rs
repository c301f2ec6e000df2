use serde::{Deserialize, Serialize};

use super::corrector::{corrector_weighted, AeffWeighting};
use super::principal::{mass, mu_second_at_zero, mu_values, principal_cell_eig, rho_psi_average, CellEigenpair, MuSecond, MU2_STEP};
use crate::error::{Error, Result, StageExt};
use crate::expr::CoefficientProblem;
use crate::fem::{integrate, CellGrid};

/// Default `x1` step for `∂ₓ₁Ψ`.
pub const PSI_STEP: f64 = 0.02;

/// `c^eff = ∫ ∂ₓ₁Ψ (a∇Ψ)₁ − ∂ₓ₁(a∇Ψ)₁ Ψ` at `x1 = 0`, from eigenpairs at
/// `-h`, `0`, `h` (each normalized by `∫ρΨ² = 1`).
pub fn c_effective(
    problem: &CoefficientProblem,
    minus: &CellEigenpair,
    center: &CellEigenpair,
    plus: &CellEigenpair,
) -> Result<f64> {
    let grid = center.cell_grid();
    if minus.grid != center.grid || plus.grid != center.grid {
        return Err(Error::DimensionMismatch("eigenpairs on different grids".into()));
    }
    let h = 0.5 * (plus.x1 - minus.x1);
    if !(h > 0.0) || (plus.x1 - center.x1 - h).abs() > 1e-12 * h.max(1.0) {
        return Err(Error::Precondition(format!(
            "need x1 = c - h, c, c + h; got {}, {}, {}",
            minus.x1, center.x1, plus.x1
        )));
    }
    let m = mass(&grid)?;
    for side in [minus, plus] {
        if m.bilinear(&side.psi, &center.psi) <= 0.0 {
            return Err(Error::Internal(format!(
                "Psi at x1 = {} is anti-correlated with Psi at x1 = {}",
                side.x1, center.x1
            )));
        }
    }
    let x0 = center.x1;
    let flux1 = |x1: f64, psi: &[f64], q: &crate::fem::QuadPoint| -> Result<f64> {
        let a = problem.diffusion(x1, q.fast[0], q.fast[1])?;
        Ok(a.apply(q.gradient(psi))[0])
    };
    integrate(&grid, |q| {
        let dpsi = (q.interpolate(&plus.psi) - q.interpolate(&minus.psi)) / (2.0 * h);
        let dflux = (flux1(plus.x1, &plus.psi, q)? - flux1(minus.x1, &minus.psi, q)?) / (2.0 * h);
        let psi = q.interpolate(&center.psi);
        Ok(dpsi * flux1(x0, &center.psi, q)? - dflux * psi)
    })
}

/// Grid and step choices for the effective model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConfig {
    pub grid: CellGrid,
    pub mu2_step: f64,
    pub psi_step: f64,
    pub weighting: AeffWeighting,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        EffectiveConfig {
            grid: CellGrid { n1: 64, n2: 16 },
            mu2_step: MU2_STEP,
            psi_step: PSI_STEP,
            weighting: AeffWeighting::PsiSquared,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub cell_grid: [usize; 2],
    pub mu2_step: f64,
    pub psi_step: f64,
    pub coefficient_fd_step: f64,
    pub weighting: AeffWeighting,
    /// The `Ψ` normalization used at every `x1`.
    pub normalization: String,
    pub mu2_step_h: f64,
    pub mu2_step_half: f64,
    pub h6_scan: Vec<(f64, f64)>,
    /// `a_eff` from the defining integral, for comparison with the energy form.
    pub a_eff_defining: f64,
}

/// Constants of the limit oscillator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveModel {
    pub problem: String,
    pub mu0: f64,
    pub mu2: f64,
    pub a_eff: f64,
    pub a_eff_matrix: [[f64; 2]; 2],
    pub c_eff: f64,
    pub rho_psi_avg: f64,
    pub provenance: Provenance,
    /// `Ψ(0,·)` on the cell grid; not serialized.
    #[serde(skip)]
    pub psi0: Option<CellEigenpair>,
}

/// `μ(0)`, `μ″(0)`, `A_eff`, `c_eff` and `⟨ρ_Ψ⟩` at `x1 = 0`.
pub fn build_effective_model(problem: &CoefficientProblem, cfg: &EffectiveConfig) -> Result<EffectiveModel> {
    let grid = cfg.grid;
    let center = principal_cell_eig(problem, 0.0, &grid).stage("principal_cell_eig")?;
    let MuSecond {
        mu0: _,
        mu2,
        mu2_step_h,
        mu2_step_half,
        scan,
        ..
    } = mu_second_at_zero(problem, &grid, cfg.mu2_step).stage("mu_second_at_zero")?;
    let weighted = corrector_weighted(problem, &center, cfg.weighting).stage("corrector_weighted")?;
    let sides = mu_values(problem, &grid, &[-cfg.psi_step, cfg.psi_step]).stage("c_effective")?;
    let c_eff = c_effective(problem, &sides[0], &center, &sides[1]).stage("c_effective")?;
    let rho_psi_avg = rho_psi_average(problem, &grid, 0.0, &center.psi).stage("rho_psi_average")?;

    if !(weighted.a_eff > 0.0) {
        return Err(Error::Internal(format!("a_eff = {} is not positive", weighted.a_eff)));
    }
    Ok(EffectiveModel {
        problem: problem.name.clone(),
        mu0: center.mu,
        mu2,
        a_eff: weighted.a_eff,
        a_eff_matrix: weighted.a_eff_matrix,
        c_eff,
        rho_psi_avg,
        provenance: Provenance {
            cell_grid: [grid.n1, grid.n2],
            mu2_step: cfg.mu2_step,
            psi_step: cfg.psi_step,
            coefficient_fd_step: super::principal::COEFFICIENT_FD_STEP,
            weighting: cfg.weighting,
            normalization: "int rho Psi^2 = 1 at each x1".into(),
            mu2_step_h,
            mu2_step_half,
            h6_scan: scan,
            a_eff_defining: weighted.a_eff_defining[0][0],
        },
        psi0: Some(center),
    })
}
