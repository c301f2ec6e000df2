//! Dense reference solvers for small pencils.

use nalgebra::{Cholesky as DenseCholesky, DMatrix};

use crate::error::{Error, Result};
use crate::fem::SparseSym;

/// Largest dimension accepted by the dense routines.
pub const MAX_DENSE_DIM: usize = 3000;

fn check_size(n: usize) -> Result<()> {
    if n > MAX_DENSE_DIM {
        return Err(Error::SizeExceeded {
            n,
            max: MAX_DENSE_DIM,
        });
    }
    Ok(())
}

fn lower_factor(s: &SparseSym) -> Result<DMatrix<f64>> {
    DenseCholesky::new(s.to_dense())
        .map(|c| c.l())
        .ok_or(Error::NotSpd {
            row: 0,
            pivot: f64::NAN,
        })
}

/// `L⁻¹ S L⁻ᵀ`, symmetrized.
fn congruence(l: &DMatrix<f64>, s: &SparseSym) -> DMatrix<f64> {
    let left = l.solve_lower_triangular(&s.to_dense()).expect("nonsingular factor");
    let c = l
        .solve_lower_triangular(&left.transpose())
        .expect("nonsingular factor");
    (&c + c.transpose()) * 0.5
}

fn sorted_eigenvalues(c: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// All eigenvalues of `(A, M)` with `M` SPD, ascending.
pub fn dense_generalized(a: &SparseSym, m: &SparseSym) -> Result<Vec<f64>> {
    check_size(a.dim())?;
    let l = lower_factor(m)?;
    Ok(sorted_eigenvalues(congruence(&l, a)))
}

/// Both branches of `A u = λ B u` with `A` SPD.
#[derive(Debug, Clone)]
pub struct DenseIndefinite {
    /// Ascending.
    pub positive: Vec<f64>,
    /// Descending, closest to zero first.
    pub negative: Vec<f64>,
}

pub fn dense_indefinite(a: &SparseSym, b: &SparseSym) -> Result<DenseIndefinite> {
    check_size(a.dim())?;
    let l = lower_factor(a)?;
    let theta = sorted_eigenvalues(congruence(&l, b));
    let scale = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let cut = 1e-13 * scale;
    let mut positive: Vec<f64> = theta.iter().filter(|&&t| t > cut).map(|t| 1.0 / t).collect();
    let mut negative: Vec<f64> = theta.iter().filter(|&&t| t < -cut).map(|t| 1.0 / t).collect();
    positive.sort_by(f64::total_cmp);
    negative.sort_by(|a, b| b.total_cmp(a));
    Ok(DenseIndefinite { positive, negative })
}

/// `α₁(μ)` sweeps of a cell pencil in dense arithmetic.
#[derive(Debug, Clone)]
pub struct DenseCellOracle {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    /// `1ᵀB1`.
    total_weight: f64,
}

impl DenseCellOracle {
    pub fn new(a: &SparseSym, b: &SparseSym, m: &SparseSym) -> Result<Self> {
        check_size(a.dim())?;
        let l = lower_factor(m)?;
        Ok(DenseCellOracle {
            a: congruence(&l, a),
            b: congruence(&l, b),
            total_weight: b.quad_form(&vec![1.0; b.dim()]),
        })
    }

    /// Smallest eigenvalue of `(A − μB, M)`.
    pub fn alpha1(&self, mu: f64) -> f64 {
        sorted_eigenvalues(&self.a - &self.b * mu)[0]
    }

    /// Positive root of `α₁` by doubling scan then Illinois regula falsi.
    pub fn principal(&self) -> Result<f64> {
        if self.total_weight >= 0.0 {
            return Err(Error::NoPositivePrincipal {
                average: self.total_weight,
            });
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut f_hi = self.alpha1(hi);
        while f_hi >= 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > super::MU_MAX {
                return Err(Error::Unbracketable { mu_max: super::MU_MAX });
            }
            f_hi = self.alpha1(hi);
        }
        if lo == 0.0 {
            lo = hi;
            loop {
                lo *= 0.5;
                if self.alpha1(lo) > 0.0 {
                    break;
                }
            }
        }
        let mut f_lo = self.alpha1(lo);
        let mut side = 0i8;
        for _ in 0..200 {
            if hi - lo <= 1e-14 * hi {
                break;
            }
            let mut x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            let fx = self.alpha1(x);
            if fx == 0.0 {
                return Ok(x);
            }
            if fx > 0.0 {
                lo = x;
                f_lo = fx;
                if side == 1 {
                    f_hi *= 0.5;
                }
                side = 1;
            } else {
                hi = x;
                f_hi = fx;
                if side == -1 {
                    f_lo *= 0.5;
                }
                side = -1;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
