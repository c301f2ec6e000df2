use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{principal_positive, PencilSpec};
use crate::error::{Error, Result};
use crate::expr::CoefficientProblem;
use crate::fem::{assemble_mass, assemble_stiffness, CellGrid, QuadMesh, SparseSym};

/// Step for `∂ₓ₁` of the coefficient expressions.
pub const COEFFICIENT_FD_STEP: f64 = 1e-6;
/// Base step of the five-point stencil for `μ″(0)`.
pub const MU2_STEP: f64 = 0.05;

/// Cell pencil at fixed `x1`: stiffness of `a`, weighted mass of `ρ`, and the
/// unweighted mass.
pub fn cell_pencil(problem: &CoefficientProblem, x1: f64, grid: &CellGrid) -> Result<PencilSpec> {
    let a = assemble_stiffness(grid, |q| problem.diffusion(x1, q.fast[0], q.fast[1]))?;
    let b = assemble_mass(grid, |q| problem.weight(x1, q.fast[0], q.fast[1]))?;
    let m = assemble_mass(grid, |_| Ok(1.0))?;
    PencilSpec::new(a, b, m)
}

/// Principal eigenpair of the cell problem at one `x1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellEigenpair {
    pub x1: f64,
    pub mu: f64,
    #[serde(skip)]
    pub psi: Vec<f64>,
    /// Residual of the `α₁` eigenpair at `μ`.
    pub residual: f64,
    /// `α₁(μ)`, zero at an exact root.
    pub alpha: f64,
    /// `ΨᵀB_ρΨ`.
    pub normalization: f64,
    pub min_psi: f64,
    pub grid: [usize; 2],
}

impl CellEigenpair {
    pub fn cell_grid(&self) -> CellGrid {
        CellGrid {
            n1: self.grid[0],
            n2: self.grid[1],
        }
    }
}

pub fn principal_cell_eig(
    problem: &CoefficientProblem,
    x1: f64,
    grid: &CellGrid,
) -> Result<CellEigenpair> {
    let pencil = cell_pencil(problem, x1, grid)?;
    let p = principal_positive(&pencil)?;
    let min_psi = p.psi.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_psi > 0.0) {
        return Err(Error::Internal(format!(
            "principal eigenvector at x1 = {x1} has min nodal value {min_psi:e}"
        )));
    }
    Ok(CellEigenpair {
        x1,
        mu: p.mu,
        normalization: pencil.b.quad_form(&p.psi),
        residual: p.residual,
        alpha: p.alpha,
        psi: p.psi,
        min_psi,
        grid: [grid.n1, grid.n2],
    })
}

/// `μ′(x₁) = ∫ ∂ₓ₁a ∇Ψ·∇Ψ − μ ∫ ∂ₓ₁ρ Ψ²` for `∫ρΨ² = 1`.
pub fn mu_prime(problem: &CoefficientProblem, pair: &CellEigenpair) -> Result<f64> {
    let grid = pair.cell_grid();
    let x1 = pair.x1;
    let h = COEFFICIENT_FD_STEP;
    let da = assemble_stiffness(&grid, |q| problem.diffusion_dx1(x1, q.fast[0], q.fast[1], h))?;
    let drho = assemble_mass(&grid, |q| problem.weight_dx1(x1, q.fast[0], q.fast[1], h))?;
    let psi = &pair.psi;
    Ok((da.quad_form(psi) - pair.mu * drho.quad_form(psi)) / pair.normalization)
}

/// `μ` at each point, evaluated concurrently; order follows `xs`.
pub fn mu_values(problem: &CoefficientProblem, grid: &CellGrid, xs: &[f64]) -> Result<Vec<CellEigenpair>> {
    xs.par_iter()
        .map(|&x| principal_cell_eig(problem, x, grid))
        .collect()
}

/// `μ″(0)` with the data behind it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuSecond {
    pub mu0: f64,
    /// Richardson combination of the two stencils.
    pub mu2: f64,
    pub mu2_step_h: f64,
    pub mu2_step_half: f64,
    pub step: f64,
    /// `(x1, μ(x1))` on nine equispaced points of `[-1, 1]`.
    pub scan: Vec<(f64, f64)>,
}

fn five_point(f: [f64; 5], h: f64) -> f64 {
    (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h)
}

/// `μ″(0)` by five-point stencils at `h` and `h/2` with Richardson
/// extrapolation, and the H6 check: `μ″(0)` clearly positive and `μ(0)`
/// strictly below every other scan value.
pub fn mu_second_at_zero(problem: &CoefficientProblem, grid: &CellGrid, h: f64) -> Result<MuSecond> {
    let scan_x: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
    let stencil = [-2.0 * h, -h, -0.5 * h, 0.5 * h, h, 2.0 * h];
    let mut xs = scan_x.clone();
    xs.extend_from_slice(&stencil);
    let pairs = mu_values(problem, grid, &xs)?;
    let mu: Vec<f64> = pairs.iter().map(|p| p.mu).collect();
    let scan: Vec<(f64, f64)> = scan_x.iter().copied().zip(mu[..9].iter().copied()).collect();
    let mu0 = mu[4];
    let s = &mu[9..];
    let d_h = five_point([s[0], s[1], mu0, s[4], s[5]], h);
    let d_half = five_point([s[1], s[2], mu0, s[3], s[4]], 0.5 * h);
    let mu2 = (16.0 * d_half - d_h) / 15.0;

    let result = MuSecond {
        mu0,
        mu2,
        mu2_step_h: d_h,
        mu2_step_half: d_half,
        step: h,
        scan: scan.clone(),
    };
    if !(mu2 > 1e-6 * mu0.abs()) {
        return Err(Error::H6Violated {
            reason: format!("mu''(0) = {mu2:e} is not positive"),
            scan,
        });
    }
    let margin = 1e-9 * mu0.abs();
    if let Some(&(x, m)) = scan.iter().find(|&&(x, m)| x != 0.0 && m <= mu0 + margin) {
        return Err(Error::H6Violated {
            reason: format!("mu({x}) = {m} is not above mu(0) = {mu0}"),
            scan,
        });
    }
    Ok(result)
}

/// Un-normalized `∫ ρ(x₁,·) Ψ²` on the cell, for any nodal `Ψ`.
pub fn rho_psi_average(problem: &CoefficientProblem, grid: &CellGrid, x1: f64, psi: &[f64]) -> Result<f64> {
    if psi.len() != grid.n_dofs() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} values, grid has {} DOFs",
            psi.len(),
            grid.n_dofs()
        )));
    }
    crate::fem::integrate(grid, |q| {
        let v = q.interpolate(psi);
        Ok(problem.weight(x1, q.fast[0], q.fast[1])? * v * v)
    })
}

pub(crate) fn mass(grid: &CellGrid) -> Result<SparseSym> {
    assemble_mass(grid, |_| Ok(1.0))
}
