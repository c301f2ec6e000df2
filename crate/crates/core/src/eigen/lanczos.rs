//! Lanczos iteration for the largest eigenvalues of an operator that is
//! self-adjoint in a `W` inner product, with full reorthogonalization,
//! explicit restarts and locking of converged Ritz pairs.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::dot;

#[derive(Debug, Clone)]
pub(crate) struct LanczosConfig {
    pub nev: usize,
    /// Ritz residual bound relative to the largest Ritz magnitude.
    pub tol: f64,
    /// Budget of operator applications.
    pub max_steps: usize,
    /// Basis size per restart cycle.
    pub ncv: usize,
    pub seed: u64,
    /// Rerun from a fresh random start after convergence to catch missed copies
    /// of repeated eigenvalues.
    pub confirm: bool,
}

impl LanczosConfig {
    pub fn new(nev: usize, tol: f64, max_steps: usize, seed: u64) -> Self {
        LanczosConfig {
            nev,
            tol,
            max_steps,
            ncv: (2 * nev + 20).max(30),
            seed,
            confirm: false,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RitzPairs {
    /// Descending.
    pub values: Vec<f64>,
    /// `W`-orthonormal.
    pub vectors: Vec<Vec<f64>>,
    pub steps: usize,
}

struct Basis {
    v: Vec<Vec<f64>>,
    wv: Vec<Vec<f64>>,
}

impl Basis {
    fn new() -> Self {
        Basis {
            v: Vec::new(),
            wv: Vec::new(),
        }
    }

    fn push<M: Fn(&[f64]) -> Vec<f64>>(&mut self, v: Vec<f64>, metric: &M) {
        self.wv.push(metric(&v));
        self.v.push(v);
    }

    /// Removes the components along the basis; returns the coefficients.
    fn project_out(&self, w: &mut [f64]) -> Vec<f64> {
        let mut coef = vec![0.0; self.v.len()];
        for _pass in 0..2 {
            for (k, (v, wv)) in self.v.iter().zip(&self.wv).enumerate() {
                let c = dot(wv, w);
                coef[k] += c;
                axpy(-c, v, w);
            }
        }
        coef
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn w_norm<M: Fn(&[f64]) -> Vec<f64>>(x: &[f64], metric: &M) -> f64 {
    dot(x, &metric(x)).max(0.0).sqrt()
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

struct Cycle {
    /// Ritz values, descending, with residual estimates and basis coordinates.
    theta: Vec<f64>,
    resid: Vec<f64>,
    coords: Vec<Vec<f64>>,
    basis: Vec<Vec<f64>>,
    steps: usize,
}

impl Cycle {
    fn ritz_vector(&self, i: usize) -> Vec<f64> {
        let n = self.basis[0].len();
        let mut y = vec![0.0; n];
        for (c, v) in self.coords[i].iter().zip(&self.basis) {
            axpy(*c, v, &mut y);
        }
        y
    }
}

fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

/// One Lanczos cycle of at most `ncv` steps from `start`, orthogonal to
/// `locked`. Stops early once the leading `want` Ritz pairs meet `tol`.
#[allow(clippy::too_many_arguments)]
fn run_cycle<O, M>(
    op: &mut O,
    metric: &M,
    locked: &Basis,
    start: Vec<f64>,
    ncv: usize,
    want: usize,
    tol: f64,
    n: usize,
) -> Option<Cycle>
where
    O: FnMut(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let mut v0 = start;
    locked.project_out(&mut v0);
    let nrm = w_norm(&v0, metric);
    if !(nrm > 0.0) || !nrm.is_finite() {
        return None;
    }
    v0.iter_mut().for_each(|x| *x /= nrm);

    let mut basis = Basis::new();
    basis.push(v0, metric);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let max_dim = ncv.min(n - locked.v.len());
    let mut steps = 0;
    loop {
        let j = basis.v.len() - 1;
        let mut w = op(&basis.v[j]);
        steps += 1;
        locked.project_out(&mut w);
        let coef = basis.project_out(&mut w);
        alpha.push(coef[j]);
        let b = w_norm(&w, metric);
        let scale = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1e-300);
        let exhausted = basis.v.len() >= max_dim || b <= 1e-13 * scale;
        let check = exhausted || basis.v.len() % 5 == 0;
        if check {
            let (theta, coords) = tridiagonal_eigen(&alpha, &beta);
            let m = alpha.len();
            let b_eff = if exhausted && b <= 1e-13 * scale { 0.0 } else { b };
            let resid: Vec<f64> = coords.iter().map(|s| (b_eff * s[m - 1]).abs()).collect();
            let tscale = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            let done = (0..want.min(m)).all(|i| resid[i] <= tol * tscale);
            if exhausted || done {
                return Some(Cycle {
                    theta,
                    resid,
                    coords,
                    basis: basis.v,
                    steps,
                });
            }
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w, metric);
    }
}

/// Largest `cfg.nev` eigenpairs of `op`, self-adjoint in the inner product
/// `⟨x, y⟩ = xᵀ W y` with `W x = metric(x)`.
pub(crate) fn largest<O, M>(
    n: usize,
    mut op: O,
    metric: M,
    cfg: &LanczosConfig,
    start: Option<&[f64]>,
) -> Result<RitzPairs>
where
    O: FnMut(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    if cfg.nev == 0 || cfg.nev > n {
        return Err(Error::Precondition(format!(
            "requested {} eigenpairs of a dimension-{n} operator",
            cfg.nev
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut locked = Basis::new();
    let mut locked_theta: Vec<f64> = Vec::new();
    let mut steps = 0usize;
    let mut next_start = start.map(|s| s.to_vec());
    let mut target = cfg.nev;
    let mut confirmed = !cfg.confirm;
    let mut last_resid = f64::INFINITY;

    loop {
        if locked_theta.len() >= target {
            if confirmed || locked.v.len() >= n {
                break;
            }
            // Confirmation: a fresh random start must not reveal anything above
            // the smallest accepted value.
            let cycle = run_cycle(
                &mut op,
                &metric,
                &locked,
                random_vector(n, &mut rng),
                cfg.ncv,
                1,
                cfg.tol,
                n,
            );
            let Some(cycle) = cycle else { break };
            steps += cycle.steps;
            let mut sorted = locked_theta.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let floor = sorted[cfg.nev - 1];
            let tscale = locked_theta
                .iter()
                .chain(&cycle.theta)
                .fold(0.0f64, |m, t| m.max(t.abs()));
            if cycle.theta[0] > floor + 10.0 * cfg.tol * tscale {
                target += 1;
                if cycle.resid[0] <= cfg.tol * tscale {
                    let y = cycle.ritz_vector(0);
                    locked.push(y, &metric);
                    locked_theta.push(cycle.theta[0]);
                } else {
                    next_start = Some(cycle.ritz_vector(0));
                }
                if target > cfg.nev + 3 {
                    // More than three hidden copies: out of scope.
                    confirmed = true;
                }
                continue;
            }
            confirmed = true;
            continue;
        }
        if steps >= cfg.max_steps {
            return Err(Error::NotConverged {
                iterations: steps,
                residual: last_resid,
            });
        }
        let start = next_start
            .take()
            .unwrap_or_else(|| random_vector(n, &mut rng));
        let want = target - locked_theta.len();
        let ncv = cfg.ncv.min(cfg.max_steps.saturating_sub(steps).max(want + 2));
        let Some(cycle) = run_cycle(&mut op, &metric, &locked, start, ncv, want, cfg.tol, n) else {
            next_start = Some(random_vector(n, &mut rng));
            steps += 1;
            continue;
        };
        steps += cycle.steps;
        let tscale = cycle.theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let mut newly = 0;
        for i in 0..cycle.theta.len().min(want) {
            if cycle.resid[i] <= cfg.tol * tscale {
                let y = cycle.ritz_vector(i);
                locked.push(y, &metric);
                locked_theta.push(cycle.theta[i]);
                newly += 1;
            } else {
                break;
            }
        }
        if locked.v.len() >= n {
            break;
        }
        if locked_theta.len() < target {
            if let Some(r) = cycle.resid.get(newly) {
                last_resid = r / tscale.max(1e-300);
            }
            let mut y = vec![0.0; n];
            for i in newly..cycle.theta.len().min(want) {
                let r = cycle.ritz_vector(i);
                axpy(1.0, &r, &mut y);
            }
            next_start = Some(y);
        }
    }

    // Orthogonal transformations can reorder values within tolerance.
    let mut order: Vec<usize> = (0..locked_theta.len()).collect();
    order.sort_by(|&a, &b| locked_theta[b].total_cmp(&locked_theta[a]));
    order.truncate(cfg.nev.min(order.len()));
    Ok(RitzPairs {
        values: order.iter().map(|&i| locked_theta[i]).collect(),
        vectors: order.iter().map(|&i| locked.v[i].clone()).collect(),
        steps,
    })
}

/// Largest Ritz value after `steps` unrestarted Lanczos steps: a lower bound on
/// the largest eigenvalue.
pub(crate) fn top_ritz_value<O>(n: usize, mut op: O, steps: usize, seed: u64) -> f64
where
    O: FnMut(&[f64]) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ident = |x: &[f64]| x.to_vec();
    let empty = Basis::new();
    run_cycle(
        &mut op,
        &ident,
        &empty,
        random_vector(n, &mut rng),
        steps.min(n),
        1,
        0.0,
        n,
    )
    .map(|c| c.theta[0])
    .unwrap_or(f64::NAN)
}
