use serde::{Deserialize, Serialize};

use super::principal::{mass, CellEigenpair};
use crate::eigen::Cholesky;
use crate::error::{Error, Result};
use crate::expr::{CoefficientProblem, Sym2};
use crate::fem::{assemble_load, assemble_stiffness, integrate, CellGrid, QuadMesh, QuadPoint, SparseSym};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectorKind {
    /// `N^{1,1}` of the unweighted cell operator.
    Case1,
    /// `N_j` of the `Ψ²`-weighted operator, `j ∈ {1, 2}`.
    Weighted { j: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectorField {
    pub kind: CorrectorKind,
    pub x1: f64,
    pub values: Vec<f64>,
    /// `M`-weighted mean removed.
    pub zero_mean: bool,
}

/// Weight used for the effective diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AeffWeighting {
    /// `a_Ψ = a Ψ²`.
    #[default]
    PsiSquared,
    /// `a` alone.
    Unweighted,
}

/// Solves `K N = -f` on the periodic cell for `f ⟂ 1`: pins DOF 0, then
/// removes the `M`-weighted mean.
pub(crate) fn solve_gauged(k: &SparseSym, f: &[f64], m: &SparseSym) -> Result<Vec<f64>> {
    let n = k.dim();
    let keep: Vec<usize> = (1..n).collect();
    let reduced = k.submatrix(&keep);
    let factor = Cholesky::factor(&reduced)
        .map_err(|e| Error::Internal(format!("pinned corrector matrix is singular: {e}")))?;
    let rhs: Vec<f64> = f[1..].iter().map(|v| -v).collect();
    let sol = factor.solve(&rhs);
    let mut full = Vec::with_capacity(n);
    full.push(0.0);
    full.extend(sol);
    let ones = vec![1.0; n];
    let mass_total = m.quad_form(&ones);
    let mean = m.bilinear(&ones, &full) / mass_total;
    full.iter_mut().for_each(|v| *v -= mean);
    Ok(full)
}

/// `N^{1,1}` and `a^eff(x₁) = ∫ a_{1j}(δ_{1j} + ∂_j N^{1,1})`.
pub fn corrector_case1(
    problem: &CoefficientProblem,
    x1: f64,
    grid: &CellGrid,
) -> Result<(CorrectorField, f64)> {
    let coef = |q: &QuadPoint| problem.diffusion(x1, q.fast[0], q.fast[1]);
    let k = assemble_stiffness(grid, coef)?;
    let f = assemble_load(grid, |q| Ok(coef(q)?.apply([1.0, 0.0])))?;
    let n = if f.iter().all(|&v| v == 0.0) {
        vec![0.0; grid.n_dofs()]
    } else {
        solve_gauged(&k, &f, &mass(grid)?)?
    };
    let a_eff = integrate(grid, |q| {
        let a = coef(q)?;
        let g = q.gradient(&n);
        Ok(a.xx * (1.0 + g[0]) + a.xy * g[1])
    })?;
    Ok((
        CorrectorField {
            kind: CorrectorKind::Case1,
            x1,
            values: n,
            zero_mean: true,
        },
        a_eff,
    ))
}

/// Weighted correctors and the effective tensor at `x1 = psi0.x1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedCorrectors {
    pub n1: CorrectorField,
    pub n2: CorrectorField,
    /// Energy form `∫ a_Ψ ∇(N_k + ζ_k)·∇(N_i + ζ_i)`.
    pub a_eff_matrix: [[f64; 2]; 2],
    /// Defining form `∫ (a_Ψ)_{ik}(δ_{kj} + ∂_k N_j)`.
    pub a_eff_defining: [[f64; 2]; 2],
    /// `A_eff[1,1]` of the energy form.
    pub a_eff: f64,
    pub weighting: AeffWeighting,
}

pub fn corrector_weighted(
    problem: &CoefficientProblem,
    psi0: &CellEigenpair,
    weighting: AeffWeighting,
) -> Result<WeightedCorrectors> {
    corrector_weighted_field(problem, &psi0.cell_grid(), psi0.x1, &psi0.psi, weighting)
}

/// As [`corrector_weighted`] for an arbitrary nodal `Ψ`.
pub fn corrector_weighted_field(
    problem: &CoefficientProblem,
    grid: &CellGrid,
    x1: f64,
    psi: &[f64],
    weighting: AeffWeighting,
) -> Result<WeightedCorrectors> {
    if psi.len() != grid.n_dofs() {
        return Err(Error::DimensionMismatch(format!(
            "Psi has {} values, grid has {} DOFs",
            psi.len(),
            grid.n_dofs()
        )));
    }
    let coef = |q: &QuadPoint| -> Result<Sym2> {
        let a = problem.diffusion(x1, q.fast[0], q.fast[1])?;
        Ok(match weighting {
            AeffWeighting::PsiSquared => {
                let v = q.interpolate(psi);
                a.scale(v * v)
            }
            AeffWeighting::Unweighted => a,
        })
    };
    let k = assemble_stiffness(grid, coef)?;
    let m = mass(grid)?;
    let mut fields = Vec::with_capacity(2);
    for j in 0..2 {
        let mut e = [0.0; 2];
        e[j] = 1.0;
        let f = assemble_load(grid, |q| Ok(coef(q)?.apply(e)))?;
        fields.push(solve_gauged(&k, &f, &m)?);
    }

    let mut energy = [[0.0; 2]; 2];
    let mut defining = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            energy[i][j] = integrate(grid, |q| {
                let a = coef(q)?;
                let mut gi = q.gradient(&fields[i]);
                let mut gj = q.gradient(&fields[j]);
                gi[i] += 1.0;
                gj[j] += 1.0;
                let agj = a.apply(gj);
                Ok(agj[0] * gi[0] + agj[1] * gi[1])
            })?;
            defining[i][j] = integrate(grid, |q| {
                let a = coef(q)?;
                let mut g = q.gradient(&fields[j]);
                g[j] += 1.0;
                Ok(a.apply(g)[i])
            })?;
        }
    }
    let mut it = fields.into_iter();
    let field = |values: Vec<f64>, j: usize| CorrectorField {
        kind: CorrectorKind::Weighted { j },
        x1,
        values,
        zero_mean: true,
    };
    Ok(WeightedCorrectors {
        n1: field(it.next().unwrap(), 1),
        n2: field(it.next().unwrap(), 2),
        a_eff: energy[0][0],
        a_eff_matrix: energy,
        a_eff_defining: defining,
        weighting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficient_has_zero_corrector() {
        let p = CoefficientProblem::from_strs("c", "1", "cos(2*pi*y1) - 0.5").unwrap();
        let (n, a) = corrector_case1(&p, 0.0, &CellGrid::new(8, 4).unwrap()).unwrap();
        assert!(n.values.iter().all(|&v| v == 0.0));
        assert!((a - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_psi_gives_squared_weight() {
        let p = CoefficientProblem::from_strs("c", "1", "cos(2*pi*y1) - 0.5").unwrap();
        let g = CellGrid::new(8, 4).unwrap();
        let psi = vec![1.5; g.n_dofs()];
        let w = corrector_weighted_field(&p, &g, 0.0, &psi, AeffWeighting::PsiSquared).unwrap();
        assert!(w.n1.values.iter().all(|v| v.abs() < 1e-12));
        assert!((w.a_eff - 2.25).abs() < 1e-12);
    }

    #[test]
    fn transverse_corrector_is_minus_y2() {
        let p = CoefficientProblem::builtin("P_MATRIX").unwrap();
        let g = CellGrid::new(12, 6).unwrap();
        let psi = g.nodal(|a, b| 1.0 + 0.3 * (2.0 * std::f64::consts::PI * a).cos() + 0.1 * b);
        let w = corrector_weighted_field(&p, &g, 0.0, &psi, AeffWeighting::PsiSquared).unwrap();
        let expect = g.nodal(|_, y2| 0.5 - y2);
        for (v, e) in w.n2.values.iter().zip(&expect) {
            assert!((v - e).abs() < 1e-10);
        }
        assert!(w.a_eff_matrix[1][0].abs() < 1e-10);
        assert!((w.a_eff_matrix[0][1] - w.a_eff_matrix[1][0]).abs() < 1e-12);
    }
}
