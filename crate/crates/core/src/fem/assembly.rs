use rayon::prelude::*;

use super::grid::{Element, QuadMesh};
use super::sparse::SparseSym;
use crate::error::{Error, Result};
use crate::expr::Sym2;

/// Reference Gauss abscissae on `[0, 1]`.
const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// A quadrature point of a bilinear element with everything needed to
/// integrate against the element's shape functions.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    /// Physical coordinates.
    pub pos: [f64; 2],
    /// Cell (fast) coordinates.
    pub fast: [f64; 2],
    pub weight: f64,
    pub shape: [f64; 4],
    /// Physical gradients of the shape functions.
    pub grad: [[f64; 2]; 4],
    pub dofs: [usize; 4],
}

impl QuadPoint {
    pub fn interpolate(&self, nodal: &[f64]) -> f64 {
        (0..4).map(|a| self.shape[a] * nodal[self.dofs[a]]).sum()
    }

    pub fn gradient(&self, nodal: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for a in 0..4 {
            let v = nodal[self.dofs[a]];
            g[0] += self.grad[a][0] * v;
            g[1] += self.grad[a][1] * v;
        }
        g
    }
}

/// The four 2×2 Gauss points of an element.
pub fn quad_points(el: &Element) -> [QuadPoint; 4] {
    let [hx, hy] = el.size;
    let area = hx * hy;
    let mut out = [QuadPoint {
        pos: [0.0; 2],
        fast: [0.0; 2],
        weight: 0.0,
        shape: [0.0; 4],
        grad: [[0.0; 2]; 4],
        dofs: el.dofs,
    }; 4];
    let mut q = 0;
    for &t in &GAUSS {
        for &s in &GAUSS {
            let p = &mut out[q];
            p.pos = [el.origin[0] + s * hx, el.origin[1] + t * hy];
            p.fast = [
                el.fast_origin[0] + s * el.fast_size[0],
                el.fast_origin[1] + t * el.fast_size[1],
            ];
            p.weight = 0.25 * area;
            p.shape = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
            p.grad = [
                [-(1.0 - t) / hx, -(1.0 - s) / hy],
                [(1.0 - t) / hx, -s / hy],
                [t / hx, s / hy],
                [-t / hx, (1.0 - s) / hy],
            ];
            q += 1;
        }
    }
    out
}

type Local = [[f64; 4]; 4];

fn assemble_local<M, F>(mesh: &M, local: F) -> Result<SparseSym>
where
    M: QuadMesh + ?Sized,
    F: Fn(&[QuadPoint; 4]) -> Result<Local> + Sync,
{
    let blocks: Vec<(Element, Local)> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let el = mesh.element(e);
            local(&quad_points(&el)).map(|k| (el, k))
        })
        .collect::<Result<_>>()?;
    let mut triplets = Vec::with_capacity(blocks.len() * 10);
    for (el, k) in &blocks {
        for a in 0..4 {
            for b in a..4 {
                let (i, j) = (el.dofs[a], el.dofs[b]);
                triplets.push((i.min(j), i.max(j), k[a][b]));
            }
        }
    }
    SparseSym::from_upper_triplets(mesh.n_dofs(), triplets)
}

/// `∫ a ∇φ_i · ∇φ_j` with `a` sampled at each quadrature point.
pub fn assemble_stiffness<M, F>(mesh: &M, a: F) -> Result<SparseSym>
where
    M: QuadMesh + ?Sized,
    F: Fn(&QuadPoint) -> Result<Sym2> + Sync,
{
    assemble_local(mesh, |qps| {
        let mut k = [[0.0; 4]; 4];
        for q in qps {
            let c = a(q)?;
            for i in 0..4 {
                let ag = c.apply(q.grad[i]);
                for j in i..4 {
                    k[i][j] += q.weight * (ag[0] * q.grad[j][0] + ag[1] * q.grad[j][1]);
                }
            }
        }
        Ok(k)
    })
}

/// `∫ w φ_i φ_j`; `w` may change sign.
pub fn assemble_mass<M, F>(mesh: &M, w: F) -> Result<SparseSym>
where
    M: QuadMesh + ?Sized,
    F: Fn(&QuadPoint) -> Result<f64> + Sync,
{
    assemble_local(mesh, |qps| {
        let mut k = [[0.0; 4]; 4];
        for q in qps {
            let c = w(q)? * q.weight;
            for i in 0..4 {
                for j in i..4 {
                    k[i][j] += c * q.shape[i] * q.shape[j];
                }
            }
        }
        Ok(k)
    })
}

/// `f_i = ∫ F · ∇φ_i`, the weak form of `-div F` tested against `φ_i`.
pub fn assemble_load<M, F>(mesh: &M, field: F) -> Result<Vec<f64>>
where
    M: QuadMesh + ?Sized,
    F: Fn(&QuadPoint) -> Result<[f64; 2]> + Sync,
{
    let blocks: Vec<(Element, [f64; 4])> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let el = mesh.element(e);
            let mut f = [0.0; 4];
            for q in &quad_points(&el) {
                let v = field(q)?;
                for (i, fi) in f.iter_mut().enumerate() {
                    *fi += q.weight * (v[0] * q.grad[i][0] + v[1] * q.grad[i][1]);
                }
            }
            Ok((el, f))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; mesh.n_dofs()];
    for (el, f) in &blocks {
        for a in 0..4 {
            out[el.dofs[a]] += f[a];
        }
    }
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    Ok(out)
}

/// `∫ f` over the mesh by the same quadrature, summed in element order.
pub fn integrate<M, F>(mesh: &M, f: F) -> Result<f64>
where
    M: QuadMesh + ?Sized,
    F: Fn(&QuadPoint) -> Result<f64> + Sync,
{
    let parts: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let el = mesh.element(e);
            let mut s = 0.0;
            for q in &quad_points(&el) {
                s += q.weight * f(q)?;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// Map between a full DOF vector and the DOFs left after elimination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Restriction {
    pub n_full: usize,
    /// Kept DOFs, ascending.
    pub keep: Vec<usize>,
}

impl Restriction {
    pub fn identity(n: usize) -> Self {
        Restriction {
            n_full: n,
            keep: (0..n).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.keep.len()
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.keep.iter().map(|&i| full[i]).collect()
    }

    /// Zero-extension to the full DOF set.
    pub fn prolong(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_full];
        for (&i, &v) in self.keep.iter().zip(reduced) {
            full[i] = v;
        }
        full
    }

    pub fn matrix(&self, s: &SparseSym) -> SparseSym {
        s.submatrix(&self.keep)
    }
}

/// Removes the rows and columns of `dofs` (homogeneous essential conditions).
pub fn apply_dirichlet(s: &SparseSym, dofs: &[usize]) -> Result<(SparseSym, Restriction)> {
    let n = s.dim();
    let mut fixed = vec![false; n];
    for &d in dofs {
        if d >= n {
            return Err(Error::DimensionMismatch(format!(
                "Dirichlet DOF {d} out of range for dimension {n}"
            )));
        }
        fixed[d] = true;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    if keep.is_empty() {
        return Err(Error::EmptyComplement);
    }
    let r = Restriction { n_full: n, keep };
    Ok((r.matrix(s), r))
}
