//! Dense reference computations shared by the integration tests. They use
//! nalgebra directly and none of the library's eigensolvers.
#![allow(dead_code)]

use nalgebra::DMatrix;
use thinspec::fem::SparseSym;

fn lower(m: &SparseSym) -> DMatrix<f64> {
    m.to_dense().cholesky().expect("SPD").l()
}

/// `L⁻¹ S L⁻ᵀ` for `M = L Lᵀ`.
fn congruence(l: &DMatrix<f64>, s: &SparseSym) -> DMatrix<f64> {
    let li = l.clone().try_inverse().expect("invertible");
    let c = &li * s.to_dense() * li.transpose();
    (&c + c.transpose()) * 0.5
}

fn ascending(c: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// All eigenvalues of `(A, M)` ascending.
pub fn generalized(a: &SparseSym, m: &SparseSym) -> Vec<f64> {
    ascending(congruence(&lower(m), a))
}

/// The `k` smallest positive eigenvalues of `A u = λ B u`, `A` SPD.
pub fn positive_branch(a: &SparseSym, b: &SparseSym, k: usize) -> Vec<f64> {
    let theta = ascending(congruence(&lower(a), b));
    let mut lam: Vec<f64> = theta.iter().rev().filter(|&&t| t > 0.0).map(|t| 1.0 / t).collect();
    lam.truncate(k);
    lam
}

/// Positive root of `μ ↦ λ_min(A − μB, M)` by plain bisection.
pub struct CellRoot {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl CellRoot {
    pub fn new(a: &SparseSym, b: &SparseSym, m: &SparseSym) -> Self {
        let l = lower(m);
        CellRoot {
            a: congruence(&l, a),
            b: congruence(&l, b),
        }
    }

    pub fn alpha1(&self, mu: f64) -> f64 {
        ascending(&self.a - &self.b * mu)[0]
    }

    pub fn root(&self) -> f64 {
        let mut hi = 1.0;
        let mut f_hi = self.alpha1(hi);
        while f_hi >= 0.0 {
            hi *= 2.0;
            f_hi = self.alpha1(hi);
        }
        let mut lo = 0.5 * hi;
        let mut f_lo = self.alpha1(lo);
        while f_lo < 0.0 {
            hi = lo;
            f_hi = f_lo;
            lo *= 0.5;
            f_lo = self.alpha1(lo);
        }
        // Illinois regula falsi.
        let mut side = 0;
        for _ in 0..100 {
            let x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            let fx = self.alpha1(x);
            if fx < 0.0 {
                hi = x;
                f_hi = fx;
                if side == -1 {
                    f_lo *= 0.5;
                }
                side = -1;
            } else {
                lo = x;
                f_lo = fx;
                if side == 1 {
                    f_hi *= 0.5;
                }
                side = 1;
            }
            if hi - lo <= 1e-14 * hi || fx == 0.0 {
                return x;
            }
        }
        0.5 * (lo + hi)
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
