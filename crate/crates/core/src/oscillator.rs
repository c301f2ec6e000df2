//! The limit harmonic oscillator
//!
//! ```text
//! -a w'' + (μ₂/2 · ρ̄ · z² + c) w = ν ρ̄ w   on ℝ
//! ```
//!
//! with closed-form eigenpairs and an independent finite element solver on a
//! truncated interval.
//!
//! The closed form solves this equation for any `ρ̄ > 0`:
//! `ν_j = (c + (2j − 1) √(a μ₂ ρ̄ / 2)) / ρ̄` and `θ = μ₂ ρ̄ / (2a)`. Under the
//! normalization `∫ρΨ² = 1` the average `ρ̄` is 1 and these reduce to
//! `ν_j = c + (2j − 1) √(a μ₂ / 2)` and `θ = μ₂ / (2a)`.
//!
//! Hermite polynomials carry the sign convention `H_j(x) = e^{x²} d^{j−1}/dx^{j−1} e^{−x²}`,
//! so `H_2(x) = −2x` is the negative of the usual physicists' `H_1`.

use serde::{Deserialize, Serialize};

use crate::cell::EffectiveModel;
use crate::eigen::{smallest_eigs, EigOptions};
use crate::error::{Error, Result};
use crate::fem::SparseSym;

/// Highest Hermite index supported by [`hermite`].
pub const MAX_HERMITE_INDEX: usize = 12;
const TAIL_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpec {
    pub a_eff: f64,
    pub c_eff: f64,
    pub mu2: f64,
    pub rho_avg: f64,
}

impl OscillatorSpec {
    pub fn new(a_eff: f64, c_eff: f64, mu2: f64, rho_avg: f64) -> Result<Self> {
        let spec = OscillatorSpec {
            a_eff,
            c_eff,
            mu2,
            rho_avg,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_model(model: &EffectiveModel) -> Result<Self> {
        Self::new(model.a_eff, model.c_eff, model.mu2, model.rho_psi_avg)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a_eff > 0.0
            && self.mu2 > 0.0
            && self.rho_avg > 0.0
            && self.c_eff.is_finite()
            && self.a_eff.is_finite()
            && self.mu2.is_finite()
            && self.rho_avg.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "oscillator needs a_eff, mu2, rho_avg > 0 and finite c_eff, got {self:?}"
            )))
        }
    }

    /// Gaussian rate `θ = μ₂ ρ̄ / (2a)`.
    pub fn theta(&self) -> f64 {
        self.mu2 * self.rho_avg / (2.0 * self.a_eff)
    }

    /// `ν_{j+1} − ν_j`.
    pub fn spacing(&self) -> f64 {
        2.0 * (self.a_eff * self.mu2 * self.rho_avg / 2.0).sqrt() / self.rho_avg
    }
}

/// `ν_j`, `j ≥ 1`.
pub fn nu_closed_form(spec: &OscillatorSpec, j: usize) -> f64 {
    assert!(j >= 1, "oscillator eigenvalues are indexed from 1");
    let s = spec.rho_avg;
    (spec.c_eff + (2 * j - 1) as f64 * (spec.a_eff * spec.mu2 * s / 2.0).sqrt()) / s
}

/// `H_j(x)` for `1 ≤ j ≤ 12` by `H_{j+1} = −2x H_j − 2(j−1) H_{j−1}`.
pub fn hermite(j: usize, x: f64) -> Result<f64> {
    if !(1..=MAX_HERMITE_INDEX).contains(&j) {
        return Err(Error::Precondition(format!(
            "Hermite index must lie in 1..={MAX_HERMITE_INDEX}, got {j}"
        )));
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 1..j {
        let next = -2.0 * x * cur - 2.0 * (k - 1) as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `w_j(z) = H_j(θ^{1/4} z) e^{−√θ z²/2}`.
pub fn eigenfunction_w(spec: &OscillatorSpec, j: usize, z: f64) -> Result<f64> {
    let t = spec.theta();
    Ok(hermite(j, t.powf(0.25) * z)? * (-(t.sqrt()) * z * z / 2.0).exp())
}

/// `∫ w_j² = θ^{−1/4} 2^{j−1} (j−1)! √π`.
pub fn eigenfunction_norm(spec: &OscillatorSpec, j: usize) -> f64 {
    let n = (j - 1) as i32;
    let fact: f64 = (1..j).map(|k| k as f64).product();
    (spec.theta().powf(-0.25) * 2f64.powi(n) * fact * std::f64::consts::PI.sqrt()).sqrt()
}

/// `w_j` scaled to unit `L²(ℝ)` norm.
pub fn eigenfunction_w_normalized(spec: &OscillatorSpec, j: usize, z: f64) -> Result<f64> {
    Ok(eigenfunction_w(spec, j, z)? / eigenfunction_norm(spec, j))
}

/// Default truncation half-width `max(8, 6/θ^{1/4})`.
pub fn default_half_width(spec: &OscillatorSpec) -> f64 {
    8f64.max(6.0 / spec.theta().powf(0.25))
}

/// Relative `L²` mass of the normalized `w_j` beyond `|z| = L`, to leading order.
pub fn tail_mass(spec: &OscillatorSpec, j: usize, half_width: f64) -> f64 {
    let s = spec.theta().powf(0.25) * half_width;
    let n = (j - 1) as i32;
    let fact: f64 = (1..j).map(|k| k as f64).product();
    let lead = (2.0 * s).powi(2 * n) * (-s * s).exp() / s;
    lead / (2f64.powi(n) * fact * std::f64::consts::PI.sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncatedSolution {
    pub half_width: f64,
    /// Raised above the requested half-width to bound the tail.
    pub widened: bool,
    pub elements: usize,
    /// Richardson-extrapolated from `n` and `2n` elements.
    pub values: Vec<f64>,
    pub values_n: Vec<f64>,
    pub values_2n: Vec<f64>,
    /// Interior nodes of the `2n` mesh.
    #[serde(skip)]
    pub nodes: Vec<f64>,
    /// Nodal eigenvectors on the `2n` mesh with `∫ ρ̄ w² = 1`.
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
}

fn assemble_1d(spec: &OscillatorSpec, half_width: f64, n: usize) -> Result<(SparseSym, SparseSym, Vec<f64>)> {
    // Three-point Gauss on [0, 1].
    let gp = [0.5 - 0.5 * (0.6f64).sqrt(), 0.5, 0.5 + 0.5 * (0.6f64).sqrt()];
    let gw = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let h = 2.0 * half_width / n as f64;
    let k2 = 0.5 * spec.mu2 * spec.rho_avg;
    let mut kt = Vec::with_capacity(3 * n);
    let mut mt = Vec::with_capacity(3 * n);
    // Interior node i ↔ global node i + 1.
    let interior = |g: usize| (g >= 1 && g < n).then(|| g - 1);
    for e in 0..n {
        let x0 = -half_width + e as f64 * h;
        let mut ke = [[0.0; 2]; 2];
        let mut me = [[0.0; 2]; 2];
        for (t, w) in gp.iter().zip(&gw) {
            let z = x0 + t * h;
            let phi = [1.0 - t, *t];
            let v = k2 * z * z + spec.c_eff;
            for a in 0..2 {
                for b in 0..2 {
                    me[a][b] += w * h * spec.rho_avg * phi[a] * phi[b];
                    ke[a][b] += w * h * v * phi[a] * phi[b];
                }
            }
        }
        let s = spec.a_eff / h;
        ke[0][0] += s;
        ke[1][1] += s;
        ke[0][1] -= s;
        ke[1][0] -= s;
        for a in 0..2 {
            for b in a..2 {
                if let (Some(i), Some(j)) = (interior(e + a), interior(e + b)) {
                    kt.push((i, j, ke[a][b]));
                    mt.push((i, j, me[a][b]));
                }
            }
        }
    }
    let nodes = (1..n).map(|g| -half_width + g as f64 * h).collect();
    Ok((
        SparseSym::from_upper_triplets(n - 1, kt)?,
        SparseSym::from_upper_triplets(n - 1, mt)?,
        nodes,
    ))
}

/// The `k` smallest eigenvalues on `(−L, L)` with Dirichlet ends, P1 elements
/// at `n` and `2n`, combined by Richardson extrapolation.
pub fn solve_truncated(
    spec: &OscillatorSpec,
    half_width: Option<f64>,
    n: usize,
    k: usize,
) -> Result<TruncatedSolution> {
    spec.validate()?;
    if n < 200 {
        return Err(Error::Precondition(format!("need at least 200 elements, got {n}")));
    }
    if k == 0 || k > MAX_HERMITE_INDEX {
        return Err(Error::Precondition(format!("k must lie in 1..={MAX_HERMITE_INDEX}")));
    }
    let requested = half_width.unwrap_or_else(|| default_half_width(spec));
    if !(requested > 0.0) {
        return Err(Error::Precondition("truncation half-width must be positive".into()));
    }
    let mut l = requested;
    while tail_mass(spec, k, l) > TAIL_LIMIT {
        l *= 1.25;
    }
    let opts = EigOptions {
        tol: 1e-10,
        max_iter: 2000,
        ..EigOptions::default()
    };
    let (kc, mc, _) = assemble_1d(spec, l, n)?;
    let coarse = smallest_eigs(&kc, &mc, k, &opts)?;
    let (kf, mf, nodes) = assemble_1d(spec, l, 2 * n)?;
    let fine = smallest_eigs(&kf, &mf, k, &opts)?;
    let values = coarse
        .values
        .iter()
        .zip(&fine.values)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    Ok(TruncatedSolution {
        half_width: l,
        widened: l > requested,
        elements: n,
        values,
        values_n: coarse.values,
        values_2n: fine.values,
        nodes,
        vectors: fine.vectors,
    })
}

/// Sign changes of a nodal profile, ignoring entries below `1e-8` of its maximum.
pub fn sign_changes(v: &[f64]) -> usize {
    let cut = 1e-8 * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut last = 0.0f64;
    let mut count = 0;
    for &x in v {
        if x.abs() <= cut {
            continue;
        }
        if last != 0.0 && (x > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = x;
    }
    count
}
