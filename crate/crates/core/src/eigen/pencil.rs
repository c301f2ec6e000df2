use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::cholesky::Cholesky;
use super::lanczos::{largest, top_ritz_value, LanczosConfig};
use crate::error::{Error, Result};
use crate::fem::{dot, SparseSym};

/// Upper limit of the bracketing search for the principal eigenvalue.
pub const MU_MAX: f64 = 1e8;
const ROOT_MAX_ITER: usize = 80;
const ROOT_REL_TOL: f64 = 1e-12;

/// The pencil `(A, B)` with an SPD mass `M` used for norms.
#[derive(Debug)]
pub struct PencilSpec {
    pub a: SparseSym,
    pub b: SparseSym,
    pub m: SparseSym,
    m_factor: OnceLock<Cholesky>,
}

impl Clone for PencilSpec {
    fn clone(&self) -> Self {
        PencilSpec {
            a: self.a.clone(),
            b: self.b.clone(),
            m: self.m.clone(),
            m_factor: self.m_factor.clone(),
        }
    }
}

impl PencilSpec {
    pub fn new(a: SparseSym, b: SparseSym, m: SparseSym) -> Result<Self> {
        if a.dim() != b.dim() || a.dim() != m.dim() {
            return Err(Error::DimensionMismatch(format!(
                "pencil blocks have dimensions {}, {}, {}",
                a.dim(),
                b.dim(),
                m.dim()
            )));
        }
        if a.dim() == 0 {
            return Err(Error::EmptyComplement);
        }
        Ok(PencilSpec {
            a,
            b,
            m,
            m_factor: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Cholesky factor of `M`, computed once.
    pub fn m_factor(&self) -> Result<&Cholesky> {
        if let Some(f) = self.m_factor.get() {
            return Ok(f);
        }
        let f = Cholesky::factor(&self.m)?;
        Ok(self.m_factor.get_or_init(|| f))
    }

    /// `‖r‖_{M⁻¹} = sqrt(rᵀ M⁻¹ r)`.
    pub fn dual_norm(&self, r: &[f64]) -> Result<f64> {
        Ok(dual_norm(self.m_factor()?, r))
    }
}

fn dual_norm(m: &Cholesky, r: &[f64]) -> f64 {
    let mut y = r.to_vec();
    m.solve_lower_in_place(&mut y);
    dot(&y, &y).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    /// Relative residual target.
    pub tol: f64,
    /// Lanczos step budget.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            tol: 1e-10,
            max_iter: 500,
            seed: 0x7468_696e,
        }
    }
}

/// Eigenpairs of a pencil, ascending.
#[derive(Debug, Clone, Serialize)]
pub struct EigResult {
    pub values: Vec<f64>,
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
    /// `‖A v − λ B v‖_{M⁻¹}` per pair.
    pub residuals: Vec<f64>,
    /// Spectral shift used by the factorization.
    pub shift: f64,
    pub iterations: usize,
}

fn lumped_min(m: &SparseSym) -> f64 {
    let sums = m.mul_vec(&vec![1.0; m.dim()]);
    sums.into_iter().fold(f64::INFINITY, f64::min)
}

/// Makes the `M`-weighted mean positive; odd fields get their largest entry
/// positive instead.
fn fix_sign(v: &mut [f64], m: &SparseSym) {
    let mean = m.mul_vec(v).iter().sum::<f64>();
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let flip = if mean.abs() > 1e-10 * scale {
        mean < 0.0
    } else {
        let k = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        v[k] < 0.0
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Factors `A + σM` for the first SPD `σ` among `1, 2, 4, …`; past the
/// Gershgorin bound `g` it continues by doubling from `g`.
fn spd_shift(a: &SparseSym, m: &SparseSym) -> Result<(f64, Cholesky)> {
    let bound = gershgorin_shift(a, m);
    let mut sigma = 1.0;
    for _ in 0..128 {
        match Cholesky::factor(&a.add_scaled(m, sigma)?) {
            Ok(f) => return Ok((sigma, f)),
            Err(Error::NotSpd { .. }) => {
                sigma = if sigma < bound { (2.0 * sigma).min(bound) } else { 2.0 * sigma };
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Internal(format!("no SPD shift up to {sigma:e}")))
}

/// `1 + |min(0, g)|` with `g` a Gershgorin bound of `A` relative to the
/// lumped mass.
fn gershgorin_shift(a: &SparseSym, m: &SparseSym) -> f64 {
    let g = a.gershgorin_lower() / lumped_min(m);
    1.0 + (-g).max(0.0)
}

pub(crate) fn smallest_with(
    a: &SparseSym,
    m: &SparseSym,
    m_factor: &Cholesky,
    k: usize,
    opts: &EigOptions,
    start: Option<&[f64]>,
    confirm: bool,
) -> Result<EigResult> {
    let n = a.dim();
    if m.dim() != n {
        return Err(Error::DimensionMismatch(format!("A is {n}, M is {}", m.dim())));
    }
    let (sigma, kf) = spd_shift(a, m)?;
    let op = |x: &[f64]| kf.solve(&m.mul_vec(x));
    let mut cfg = LanczosConfig::new(k, (opts.tol * 1e-2).max(1e-14), opts.max_iter, opts.seed);
    cfg.confirm = confirm;
    let ritz = largest(n, op, |x: &[f64]| m.mul_vec(x), &cfg, start)?;
    let mut total = ritz.steps;
    let mut values: Vec<f64> = ritz.values.iter().map(|t| 1.0 / t - sigma).collect();
    let mut vectors = ritz.vectors;
    let mut worst = f64::INFINITY;
    // Each refinement is one block inverse-iteration step with Rayleigh-Ritz.
    for refine in 0..=MAX_REFINE {
        if refine > 0 {
            let block: Vec<Vec<f64>> = vectors.iter().map(|v| op(v)).collect();
            total += k;
            (values, vectors) = rayleigh_ritz(a, m, &block)?;
        }
        let mut residuals = Vec::with_capacity(k);
        worst = 0.0f64;
        for (lambda, v) in values.iter().zip(vectors.iter_mut()) {
            fix_sign(v, m);
            let av = a.mul_vec(v);
            let mv = m.mul_vec(v);
            let r: Vec<f64> = av.iter().zip(&mv).map(|(x, y)| x - lambda * y).collect();
            let res = dual_norm(m_factor, &r);
            worst = worst.max(res / lambda.abs().max(1.0));
            residuals.push(res);
        }
        if worst <= opts.tol {
            return Ok(EigResult {
                values,
                vectors,
                residuals,
                shift: sigma,
                iterations: total,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: total,
        residual: worst,
    })
}

const MAX_REFINE: usize = 4;

/// Ritz pairs of `(A, M)` on the span of `block`, ascending and `M`-orthonormal.
fn rayleigh_ritz(a: &SparseSym, m: &SparseSym, block: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let k = block.len();
    let ab: Vec<Vec<f64>> = block.iter().map(|v| a.mul_vec(v)).collect();
    let mb: Vec<Vec<f64>> = block.iter().map(|v| m.mul_vec(v)).collect();
    let h = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&block[i], &ab[j]) + dot(&block[j], &ab[i])));
    let g = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&block[i], &mb[j]) + dot(&block[j], &mb[i])));
    let l = nalgebra::Cholesky::new(g)
        .ok_or_else(|| Error::Internal("refinement block lost rank".into()))?
        .l();
    let left = l.solve_lower_triangular(&h).expect("nonsingular factor");
    let c = l.solve_lower_triangular(&left.transpose()).expect("nonsingular factor");
    let eig = SymmetricEigen::new((&c + c.transpose()) * 0.5);
    let coords = l.transpose().solve_upper_triangular(&eig.eigenvectors).expect("nonsingular factor");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let n = block[0].len();
    let vectors = order
        .iter()
        .map(|&c| {
            let mut v = vec![0.0; n];
            for (i, b) in block.iter().enumerate() {
                let s = coords[(i, c)];
                v.iter_mut().zip(b).for_each(|(y, x)| *y += s * x);
            }
            v
        })
        .collect();
    Ok((order.iter().map(|&i| eig.eigenvalues[i]).collect(), vectors))
}

/// The `k` smallest eigenpairs of `(A, M)` by shift-invert Lanczos on
/// `A + σM`; eigenvectors are `M`-orthonormal.
pub fn smallest_eigs(a: &SparseSym, m: &SparseSym, k: usize, opts: &EigOptions) -> Result<EigResult> {
    let mf = Cholesky::factor(m)?;
    smallest_with(a, m, &mf, k, opts, None, true)
}

/// Smallest eigenpair of `(A − μB, M)`.
#[derive(Debug, Clone)]
pub struct Alpha1 {
    pub mu: f64,
    pub value: f64,
    /// `M`-normalized.
    pub vector: Vec<f64>,
    pub residual: f64,
    /// `dα₁/dμ = −ψᵀBψ / ψᵀMψ`.
    pub slope: f64,
}

pub fn alpha1(pencil: &PencilSpec, mu: f64) -> Result<Alpha1> {
    alpha1_from(pencil, mu, None, &EigOptions::default())
}

pub(crate) fn alpha1_from(
    pencil: &PencilSpec,
    mu: f64,
    start: Option<&[f64]>,
    opts: &EigOptions,
) -> Result<Alpha1> {
    if !(mu >= 0.0) {
        return Err(Error::Precondition(format!("alpha1 needs mu >= 0, got {mu}")));
    }
    let k = pencil.a.add_scaled(&pencil.b, -mu)?;
    let r = smallest_with(&k, &pencil.m, pencil.m_factor()?, 1, opts, start, false)?;
    let v = r.vectors.into_iter().next().unwrap();
    let slope = -pencil.b.quad_form(&v) / pencil.m.quad_form(&v);
    Ok(Alpha1 {
        mu,
        value: r.values[0],
        vector: v,
        residual: r.residuals[0],
        slope,
    })
}

/// Positive principal eigenpair of `A ψ = μ B ψ`.
#[derive(Debug, Clone)]
pub struct Principal {
    pub mu: f64,
    /// Positive `M`-mean, `ψᵀBψ = 1`.
    pub psi: Vec<f64>,
    /// `α₁(μ)` at the returned root.
    pub alpha: f64,
    /// Residual of the final `α₁` eigenpair.
    pub residual: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Root of the concave map `μ ↦ α₁(μ)` on `(0, ∞)`.
pub fn principal_positive(pencil: &PencilSpec) -> Result<Principal> {
    let n = pencil.dim();
    let ones = vec![1.0; n];
    let total_b = pencil.b.quad_form(&ones);
    let total_m = pencil.m.quad_form(&ones);
    if total_b >= 0.0 {
        return Err(Error::NoPositivePrincipal {
            average: total_b / total_m,
        });
    }
    if pencil.b.diag().iter().all(|&d| d <= 0.0) {
        return Err(Error::Unbracketable { mu_max: MU_MAX });
    }

    let opts = EigOptions::default();
    let mut evals = 0;
    let mut eval = |mu: f64, start: Option<&[f64]>| {
        evals += 1;
        alpha1_from(pencil, mu, start, &opts)
    };

    // α₁(lo) > 0 > α₁(hi).
    let mut lo: f64;
    let mut hi = 1.0;
    let mut at_hi = eval(hi, None)?;
    if at_hi.value >= 0.0 {
        loop {
            lo = hi;
            hi *= 2.0;
            if hi > MU_MAX {
                return Err(Error::Unbracketable { mu_max: MU_MAX });
            }
            let prev = at_hi.vector.clone();
            at_hi = eval(hi, Some(&prev))?;
            if at_hi.value < 0.0 {
                break;
            }
        }
    } else {
        let mut probe = 0.5;
        loop {
            let a = eval(probe, Some(&at_hi.vector))?;
            if a.value > 0.0 {
                lo = probe;
                break;
            }
            hi = probe;
            at_hi = a;
            probe *= 0.5;
            if probe < 1e-300 {
                return Err(Error::Internal("alpha1 has no positive values near 0".into()));
            }
        }
    }

    // Newton from the right stays right of the root by concavity.
    let mut cur = at_hi;
    for it in 1..=ROOT_MAX_ITER {
        let newton = cur.mu - cur.value / cur.slope;
        let next_mu = if cur.slope < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next_mu - cur.mu).abs();
        let next = eval(next_mu, Some(&cur.vector))?;
        if next.value < 0.0 {
            hi = next_mu;
        } else {
            lo = next_mu;
        }
        cur = next;
        let converged = step <= ROOT_REL_TOL * cur.mu
            || (hi - lo) <= ROOT_REL_TOL * hi
            || cur.value == 0.0;
        if converged {
            return finish(pencil, cur, it, evals);
        }
    }
    Err(Error::NotConverged {
        iterations: ROOT_MAX_ITER,
        residual: cur.value.abs(),
    })
}

fn finish(pencil: &PencilSpec, cur: Alpha1, iterations: usize, evaluations: usize) -> Result<Principal> {
    let mut psi = cur.vector;
    let norm = pencil.b.quad_form(&psi);
    if !(norm > 0.0) {
        return Err(Error::InvalidPrincipal { value: norm });
    }
    let s = 1.0 / norm.sqrt();
    psi.iter_mut().for_each(|x| *x *= s);
    Ok(Principal {
        mu: cur.mu,
        psi,
        alpha: cur.value,
        residual: cur.residual,
        iterations,
        evaluations,
    })
}

/// The `k` smallest positive eigenvalues of `A u = λ B u` with `A` SPD, by
/// Lanczos on `L⁻¹ B L⁻ᵀ` for `A − σB = L Lᵀ` and `σ` just below the first.
///
/// Eigenvectors are `M`-normalized; they are `B`- and `A`-orthogonal but not
/// `M`-orthogonal in general.
pub fn positive_pencil_spectrum(pencil: &PencilSpec, k: usize, opts: &EigOptions) -> Result<EigResult> {
    let n = pencil.dim();
    let a = &pencil.a;
    let b = &pencil.b;
    let base = Cholesky::factor(a)?;
    let theta_est = top_ritz_value(
        n,
        |x: &[f64]| c_apply(&base, b, x),
        40.min(n),
        opts.seed,
    );
    let (sigma, factor) = if theta_est > 0.0 {
        shift_below_first(a, b, base, 1.0 / theta_est)?
    } else {
        (0.0, base)
    };

    let mut cfg = LanczosConfig::new(k.min(n), (opts.tol * 1e-2).max(1e-14), opts.max_iter.max(50 * k), opts.seed);
    cfg.confirm = true;
    let ritz = largest(n, |x: &[f64]| c_apply(&factor, b, x), |x: &[f64]| x.to_vec(), &cfg, None)?;

    let mf = pencil.m_factor()?;
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    let mut residuals = Vec::new();
    for (theta, w) in ritz.values.iter().zip(&ritz.vectors) {
        if *theta <= 0.0 {
            break;
        }
        let lambda = sigma + 1.0 / theta;
        let mut u = w.clone();
        factor.solve_upper_in_place(&mut u);
        let s = 1.0 / pencil.m.quad_form(&u).sqrt();
        u.iter_mut().for_each(|x| *x *= s);
        fix_sign(&mut u, &pencil.m);
        let au = a.mul_vec(&u);
        let bu = b.mul_vec(&u);
        let r: Vec<f64> = au.iter().zip(&bu).map(|(x, y)| x - lambda * y).collect();
        residuals.push(dual_norm(mf, &r));
        values.push(lambda);
        vectors.push(u);
    }
    if values.len() < k {
        return Err(Error::PartialSpectrum {
            found: values.len(),
            requested: k,
        });
    }
    Ok(EigResult {
        values,
        vectors,
        residuals,
        shift: sigma,
        iterations: ritz.steps,
    })
}

fn c_apply(l: &Cholesky, b: &SparseSym, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    l.solve_upper_in_place(&mut y);
    let mut z = b.mul_vec(&y);
    l.solve_lower_in_place(&mut z);
    z
}

/// Largest `σ` found by bisection with `A − σB` SPD, within `1e-3` relative
/// of the first positive eigenvalue; `upper` must not be below it.
fn shift_below_first(
    a: &SparseSym,
    b: &SparseSym,
    base: Cholesky,
    upper: f64,
) -> Result<(f64, Cholesky)> {
    let mut lo = 0.0;
    let mut lo_factor = base;
    let mut hi = upper;
    match Cholesky::factor(&a.add_scaled(b, -hi)?) {
        Ok(f) => return Ok((hi, f)),
        Err(Error::NotSpd { .. }) => {}
        Err(e) => return Err(e),
    }
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        match Cholesky::factor(&a.add_scaled(b, -mid)?) {
            Ok(f) => {
                lo = mid;
                lo_factor = f;
            }
            Err(Error::NotSpd { .. }) => hi = mid,
            Err(e) => return Err(e),
        }
    }
    Ok((lo, lo_factor))
}

/// Negative eigenvalue of `A u = λ B u` closest to zero, if any, from the
/// smallest eigenvalue of `L⁻¹ B L⁻ᵀ` with `A = L Lᵀ`.
pub fn negative_branch_probe(pencil: &PencilSpec, opts: &EigOptions) -> Result<Option<f64>> {
    let l = Cholesky::factor(&pencil.a)?;
    let cfg = LanczosConfig::new(1, 1e-8, opts.max_iter.max(200), opts.seed ^ 0x5a5a);
    let ritz = largest(
        pencil.dim(),
        |x: &[f64]| c_apply(&l, &pencil.b, x).into_iter().map(|v| -v).collect(),
        |x: &[f64]| x.to_vec(),
        &cfg,
        None,
    )?;
    let theta_min = -ritz.values[0];
    Ok((theta_min < 0.0).then(|| 1.0 / theta_min))
}
