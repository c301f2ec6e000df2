//! Direct solves of the original eigenproblem on the thin rod
//! `Ω_ε = (−1, 1) × (0, ε)`, Dirichlet at `x₁ = ±1`, with diagnostics that
//! compare the computed positive spectrum and eigenfunctions against the
//! effective model.

mod report;

pub use report::{
    sweep, AveragingRow, ConvergenceReport, EigenRow, EpsResult, FactorizationRow, LocalizationCsvRow,
    SpectrumCheckRow, SweepConfig, SCHEMA_VERSION,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cell::EffectiveModel;
use crate::eigen::{positive_pencil_spectrum, EigOptions, PencilSpec};
use crate::error::{Error, Result};
use crate::expr::{CoefficientProblem, Sym2};
use crate::fem::{
    apply_dirichlet, assemble_mass, assemble_stiffness, integrate, quad_points, CellGrid, QuadMesh, Restriction,
    RodGrid, SparseSym,
};
use crate::oscillator::{eigenfunction_w_normalized, nu_closed_form, OscillatorSpec};

/// Fewest elements per period along `x₁`.
pub const MIN_PER_PERIOD: usize = 8;
/// Below this many elements per period the discrete `Ψ` can lose positivity
/// where `ρ` is mostly negative.
pub const MIN_MODEL_CELLS: usize = 16;

/// Elements per period along `x₁` and across the rod.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionPolicy {
    pub per_period: usize,
    pub m2: usize,
}

impl Default for ResolutionPolicy {
    fn default() -> Self {
        Self::with_per_period(16)
    }
}

impl ResolutionPolicy {
    /// `m2 = max(4, p)`, square elements.
    pub fn with_per_period(per_period: usize) -> Self {
        ResolutionPolicy {
            per_period,
            m2: per_period.max(4),
        }
    }

    /// Cell grid whose nodes coincide with one rod period.
    pub fn cell_grid(&self) -> Result<CellGrid> {
        CellGrid::new(self.per_period, self.m2)
    }

    /// Grid for the effective model: the matched cell grid, uniformly refined
    /// until it has at least [`MIN_MODEL_CELLS`] elements along `y1`. Every rod
    /// node stays a cell node.
    pub fn model_grid(&self) -> Result<CellGrid> {
        let r = MIN_MODEL_CELLS.div_ceil(self.per_period.max(1));
        CellGrid::new(self.per_period * r, self.m2 * r)
    }

    /// The rod grid for `ε`, or the reason it is refused.
    pub fn rod_grid(&self, eps: f64) -> Result<RodGrid> {
        if !(eps > 0.0 && eps <= 0.25) {
            return Err(Error::Precondition(format!("eps must lie in (0, 1/4], got {eps}")));
        }
        let k = (1.0 / eps).round();
        if ((1.0 / eps) - k).abs() > 1e-9 * k {
            return Err(Error::Precondition(format!(
                "eps must be the reciprocal of an integer, got {eps}"
            )));
        }
        let k = k as usize;
        if self.per_period < MIN_PER_PERIOD {
            return Err(Error::UnderResolved {
                m1: 2 * k * self.per_period,
                required_m1: 2 * k * MIN_PER_PERIOD,
            });
        }
        if self.m2 < 4 {
            return Err(Error::Precondition(format!("need m2 >= 4, got {}", self.m2)));
        }
        RodGrid::with_resolution(k, self.per_period, self.m2)
    }
}

/// Discrete rod problem with the Dirichlet nodes eliminated.
#[derive(Debug, Clone)]
pub struct RodPencil {
    pub grid: RodGrid,
    /// `A` (stiffness of `a`), `B` (mass of `ρ`) and `M` (unit mass) on free nodes.
    pub pencil: PencilSpec,
    pub restriction: Restriction,
    /// Unit mass on all nodes.
    pub mass_full: SparseSym,
}

impl RodPencil {
    pub fn eps(&self) -> f64 {
        self.grid.eps
    }

    pub fn dim(&self) -> usize {
        self.pencil.dim()
    }

    /// Values on all nodes, zero on the Dirichlet ends.
    pub fn prolong(&self, reduced: &[f64]) -> Vec<f64> {
        self.restriction.prolong(reduced)
    }
}

/// Bilinear elements with `a(x₁, x/ε)` and `ρ(x₁, x/ε)` sampled at Gauss points.
pub fn assemble_rod(problem: &CoefficientProblem, eps: f64, policy: &ResolutionPolicy) -> Result<RodPencil> {
    let grid = policy.rod_grid(eps)?;
    let a_full = assemble_stiffness(&grid, |q| problem.diffusion(q.pos[0], q.fast[0], q.fast[1]))?;
    let b_full = assemble_mass(&grid, |q| problem.weight(q.pos[0], q.fast[0], q.fast[1]))?;
    let mass_full = assemble_mass(&grid, |_| Ok(1.0))?;
    let (a, restriction) = apply_dirichlet(&a_full, &grid.dirichlet_dofs())?;
    let b = b_full.submatrix(&restriction.keep);
    let m = mass_full.submatrix(&restriction.keep);
    Ok(RodPencil {
        grid,
        pencil: PencilSpec::new(a, b, m)?,
        restriction,
        mass_full,
    })
}

/// Eigenvector scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationRule {
    /// `∫ u² = ε^{1/2} ε^{d−1} |Q|` with `d = 2`, `|Q| = 1`.
    #[default]
    Paper,
    /// `∫ u² = 1`.
    Unit,
}

impl NormalizationRule {
    pub fn constant(&self, eps: f64) -> f64 {
        match self {
            NormalizationRule::Paper => eps.powf(1.5),
            NormalizationRule::Unit => 1.0,
        }
    }
}

/// Positive eigenpairs of a rod, ascending.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumTable {
    pub values: Vec<f64>,
    /// On all nodes, scaled per `rule`.
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
    /// `‖A u − λ B u‖_{M⁻¹}` for `M`-unit `u`.
    pub residuals: Vec<f64>,
    pub rule: NormalizationRule,
    pub shift: f64,
    pub iterations: usize,
    /// Largest `|uᵢᵀ M uⱼ| / √(uᵢᵀMuᵢ · uⱼᵀMuⱼ)`, `i ≠ j`.
    pub m_gram_offdiag: f64,
    /// As `m_gram_offdiag` with `B`: zero for distinct eigenvalues.
    pub b_gram_offdiag: f64,
    /// `clusters[i]`: `λᵢ₊₁ − λᵢ < 1e−6 λᵢ₊₁`.
    pub clusters: Vec<bool>,
}

fn gram_offdiag(s: &SparseSym, vs: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..vs.len() {
        for j in 0..i {
            let num = s.bilinear(&vs[i], &vs[j]).abs();
            let den = (s.quad_form(&vs[i]).abs() * s.quad_form(&vs[j]).abs()).sqrt();
            worst = worst.max(num / den);
        }
    }
    worst
}

pub fn positive_spectrum(
    rod: &RodPencil,
    k: usize,
    rule: NormalizationRule,
    opts: &EigOptions,
) -> Result<SpectrumTable> {
    let r = positive_pencil_spectrum(&rod.pencil, k, opts)?;
    let m_gram_offdiag = gram_offdiag(&rod.pencil.m, &r.vectors);
    let b_gram_offdiag = gram_offdiag(&rod.pencil.b, &r.vectors);
    let c = rule.constant(rod.eps()).sqrt();
    let vectors = r
        .vectors
        .iter()
        .map(|v| {
            let mut full = rod.prolong(v);
            full.iter_mut().for_each(|x| *x *= c);
            full
        })
        .collect();
    let clusters = r.values.windows(2).map(|w| w[1] - w[0] < 1e-6 * w[1]).collect();
    Ok(SpectrumTable {
        values: r.values,
        vectors,
        residuals: r.residuals,
        rule,
        shift: r.shift,
        iterations: r.iterations,
        m_gram_offdiag,
        b_gram_offdiag,
        clusters,
    })
}

/// Two-term prediction `μ(0)/ε² + ν_j/ε`.
pub fn predicted(model: &EffectiveModel, spec: &OscillatorSpec, eps: f64, j: usize) -> f64 {
    model.mu0 / (eps * eps) + nu_closed_form(spec, j) / eps
}

/// Distance between a computed eigenfunction and `c · Ψ(0, x/ε) v_j(x₁/√ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizationError {
    /// `ε^{−1/2} ‖u − c·ref‖`.
    pub scaled: f64,
    /// `‖u − c·ref‖ / ‖u‖`.
    pub relative: f64,
    /// Least-squares `c`; its sign absorbs the sign of `u`.
    pub fit_scale: f64,
}

/// Nodal values of `Ψ(0, x/ε) v_j(x₁/√ε)` on the rod.
pub fn reference_product(
    rod: &RodPencil,
    model: &EffectiveModel,
    spec: &OscillatorSpec,
    j: usize,
) -> Result<Vec<f64>> {
    let psi = model
        .psi0
        .as_ref()
        .ok_or_else(|| Error::Precondition("effective model carries no Psi(0, .)".into()))?;
    let cell = psi.cell_grid();
    let g = &rod.grid;
    let root = g.eps.sqrt();
    let mut out = Vec::with_capacity(g.n_dofs());
    for i in 0..=g.m1 {
        let x1 = -1.0 + i as f64 * g.hx();
        let v = eigenfunction_w_normalized(spec, j, x1 / root)?;
        for jj in 0..=g.m2 {
            let [y1, y2] = g.node_fast(i, jj);
            out.push(cell.interpolate(&psi.psi, y1, y2) * v);
        }
    }
    Ok(out)
}

pub fn factorization_error(
    rod: &RodPencil,
    u: &[f64],
    model: &EffectiveModel,
    spec: &OscillatorSpec,
    j: usize,
) -> Result<FactorizationError> {
    let reference = reference_product(rod, model, spec, j)?;
    Ok(distance_to(rod, u, &reference))
}

/// Least-squares distance from `u` to the span of `reference`.
pub fn distance_to(rod: &RodPencil, u: &[f64], reference: &[f64]) -> FactorizationError {
    let m = &rod.mass_full;
    let c = m.bilinear(u, reference) / m.quad_form(reference);
    let d: Vec<f64> = u.iter().zip(reference).map(|(a, b)| a - c * b).collect();
    let dist = m.quad_form(&d).max(0.0).sqrt();
    FactorizationError {
        scaled: dist / rod.eps().sqrt(),
        relative: dist / m.quad_form(u).sqrt(),
        fit_scale: c,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    pub label: String,
    pub window: f64,
    pub fraction: f64,
}

/// Share of `∫ u²` in `|x₁| ≤ W` for `W ∈ {√ε, 2√ε, 4√ε, 6√ε, 0.5, 1}`, by
/// Gauss points inside the window. Rows are ordered by `W`.
pub fn localization_profile(rod: &RodPencil, u: &[f64]) -> Result<Vec<LocalizationRow>> {
    let r = rod.eps().sqrt();
    let mut windows = [
        ("sqrt(eps)", r),
        ("2sqrt(eps)", 2.0 * r),
        ("4sqrt(eps)", 4.0 * r),
        ("6sqrt(eps)", 6.0 * r),
        ("0.5", 0.5),
        ("1", 1.0),
    ];
    windows.sort_by(|a, b| a.1.total_cmp(&b.1));
    let total = integrate(&rod.grid, |q| Ok(q.interpolate(u).powi(2)))?;
    windows
        .iter()
        .map(|&(label, w)| {
            let part = integrate(&rod.grid, |q| {
                Ok(if q.pos[0].abs() <= w { q.interpolate(u).powi(2) } else { 0.0 })
            })?;
            Ok(LocalizationRow {
                label: label.to_string(),
                window: w,
                fraction: part / total,
            })
        })
        .collect()
}

/// `∫ w(x₁, x/ε) u² − ∫ w̄(x₁) u²` against `ε ‖u‖ ‖∇u‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragingDiagnostic {
    pub difference: f64,
    pub l2_norm: f64,
    pub grad_norm: f64,
    pub ratio: f64,
}

pub fn averaging_diagnostic(rod: &RodPencil, problem: &CoefficientProblem, u: &[f64]) -> Result<AveragingDiagnostic> {
    averaging_diagnostic_with(rod, u, |x1, y1, y2| problem.weight(x1, y1, y2))
}

/// As [`averaging_diagnostic`] for any weight `w`; `w̄` uses the cell quadrature
/// that matches one rod period.
pub fn averaging_diagnostic_with<W>(rod: &RodPencil, u: &[f64], w: W) -> Result<AveragingDiagnostic>
where
    W: Fn(f64, f64, f64) -> Result<f64> + Sync,
{
    let g = &rod.grid;
    let cell = CellGrid::new(g.per_period, g.m2)?;
    let mut mean: HashMap<u64, f64> = HashMap::new();
    for i in 0..g.m1 {
        for q in quad_points(&g.element(i * g.m2)) {
            let x1 = q.pos[0];
            if let std::collections::hash_map::Entry::Vacant(slot) = mean.entry(x1.to_bits()) {
                // Centered on one sample so that a constant weight averages exactly.
                let pivot = w(x1, 0.0, 0.0)?;
                let spread = integrate(&cell, |c| Ok(w(x1, c.fast[0], c.fast[1])? - pivot))?;
                slot.insert(pivot + spread);
            }
        }
    }
    let difference = integrate(g, |q| {
        let avg = mean
            .get(&q.pos[0].to_bits())
            .copied()
            .ok_or_else(|| Error::Internal("Gauss abscissa not shared along a column".into()))?;
        Ok((w(q.pos[0], q.fast[0], q.fast[1])? - avg) * q.interpolate(u).powi(2))
    })?;
    let l2_norm = rod.mass_full.quad_form(u).max(0.0).sqrt();
    let laplace = assemble_stiffness(g, |_| Ok(Sym2::IDENTITY))?;
    let grad_norm = laplace.quad_form(u).max(0.0).sqrt();
    Ok(AveragingDiagnostic {
        difference,
        l2_norm,
        grad_norm,
        ratio: difference.abs() / (g.eps * l2_norm * grad_norm),
    })
}
