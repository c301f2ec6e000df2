use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper limit on the element aspect ratio for rod meshes.
pub const MAX_ASPECT_RATIO: f64 = 20.0;

/// A rectangular bilinear element.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    /// Lower-left corner in physical coordinates.
    pub origin: [f64; 2],
    pub size: [f64; 2],
    /// Lower-left corner in cell (fast) coordinates `[0, 1]²`.
    pub fast_origin: [f64; 2],
    pub fast_size: [f64; 2],
    /// Local nodes ordered (0,0), (1,0), (1,1), (0,1).
    pub dofs: [usize; 4],
}

/// Structured quadrilateral meshes that can be assembled element by element.
pub trait QuadMesh: Sync {
    fn n_dofs(&self) -> usize;
    fn n_elements(&self) -> usize;
    fn element(&self, e: usize) -> Element;
    /// Physical coordinates of every DOF.
    fn dof_coords(&self) -> Vec<[f64; 2]>;
}

/// The periodicity cell `Y = [0,1) × [0,1]`, periodic in `y1` (DOF
/// identification) and free in `y2`.
///
/// DOFs are numbered column by column with `y2` fastest; the columns are
/// visited in folded order `0, n1-1, 1, n1-2, …` so the periodic wrap stays
/// inside a narrow band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellGrid {
    pub n1: usize,
    pub n2: usize,
}

impl CellGrid {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 2 || n2 < 1 {
            return Err(Error::InvalidGrid(format!(
                "cell grid needs n1 >= 2 and n2 >= 1, got {n1}x{n2}"
            )));
        }
        Ok(CellGrid { n1, n2 })
    }

    /// Parses `"N1xN2"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidGrid(format!("expected N1xN2, got `{spec}`"));
        let (a, b) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
        let n1 = a.trim().parse().map_err(|_| bad())?;
        let n2 = b.trim().parse().map_err(|_| bad())?;
        Self::new(n1, n2)
    }

    fn column_position(&self, i: usize) -> usize {
        let i = i % self.n1;
        let half = self.n1.div_ceil(2);
        if i < half {
            2 * i
        } else {
            2 * (self.n1 - 1 - i) + 1
        }
    }

    /// DOF of grid node `(i, j)`, `0 <= i <= n1`, `0 <= j <= n2`.
    pub fn dof(&self, i: usize, j: usize) -> usize {
        self.column_position(i) * (self.n2 + 1) + j
    }

    /// Inverse of [`CellGrid::dof`], with `i < n1`.
    pub fn node_of(&self, dof: usize) -> (usize, usize) {
        let pos = dof / (self.n2 + 1);
        let j = dof % (self.n2 + 1);
        let i = if pos % 2 == 0 {
            pos / 2
        } else {
            self.n1 - 1 - (pos - 1) / 2
        };
        (i, j)
    }

    /// Bilinear interpolation of a nodal field at `(y1, y2)`; `y1` is taken
    /// modulo 1 and `y2` clamped to `[0, 1]`.
    pub fn interpolate(&self, nodal: &[f64], y1: f64, y2: f64) -> f64 {
        let s1 = y1.rem_euclid(1.0) * self.n1 as f64;
        let s2 = y2.clamp(0.0, 1.0) * self.n2 as f64;
        let i = (s1.floor() as usize).min(self.n1 - 1);
        let j = (s2.floor() as usize).min(self.n2 - 1);
        let t1 = s1 - i as f64;
        let t2 = s2 - j as f64;
        let v00 = nodal[self.dof(i, j)];
        let v10 = nodal[self.dof(i + 1, j)];
        let v11 = nodal[self.dof(i + 1, j + 1)];
        let v01 = nodal[self.dof(i, j + 1)];
        (1.0 - t1) * (1.0 - t2) * v00 + t1 * (1.0 - t2) * v10 + t1 * t2 * v11 + (1.0 - t1) * t2 * v01
    }

    /// Nodal values of `f(y1, y2)`.
    pub fn nodal<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.dof_coords().into_iter().map(|[a, b]| f(a, b)).collect()
    }
}

impl QuadMesh for CellGrid {
    fn n_dofs(&self) -> usize {
        self.n1 * (self.n2 + 1)
    }

    fn n_elements(&self) -> usize {
        self.n1 * self.n2
    }

    fn element(&self, e: usize) -> Element {
        let i = e / self.n2;
        let j = e % self.n2;
        let h = [1.0 / self.n1 as f64, 1.0 / self.n2 as f64];
        let origin = [i as f64 * h[0], j as f64 * h[1]];
        Element {
            origin,
            size: h,
            fast_origin: origin,
            fast_size: h,
            dofs: [
                self.dof(i, j),
                self.dof(i + 1, j),
                self.dof(i + 1, j + 1),
                self.dof(i, j + 1),
            ],
        }
    }

    fn dof_coords(&self) -> Vec<[f64; 2]> {
        (0..self.n_dofs())
            .map(|d| {
                let (i, j) = self.node_of(d);
                [i as f64 / self.n1 as f64, j as f64 / self.n2 as f64]
            })
            .collect()
    }
}

/// The thin rod `(-1, 1) × (0, ε)` with `ε = 1/k`, meshed with a whole number of
/// elements per period so that every period carries the same fast coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodGrid {
    pub eps: f64,
    /// `1/ε`.
    pub inv_eps: usize,
    pub per_period: usize,
    pub m1: usize,
    pub m2: usize,
}

impl RodGrid {
    /// `m1` must be a multiple of the number of periods `2/ε`.
    pub fn new(eps: f64, m1: usize, m2: usize) -> Result<Self> {
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
        let periods = 2 * k;
        if m1 % periods != 0 || m1 == 0 {
            return Err(Error::InvalidGrid(format!(
                "m1 = {m1} is not a positive multiple of the {periods} periods"
            )));
        }
        Self::with_resolution(k, m1 / periods, m2)
    }

    pub fn with_resolution(inv_eps: usize, per_period: usize, m2: usize) -> Result<Self> {
        if inv_eps < 4 {
            return Err(Error::Precondition(format!(
                "eps must lie in (0, 1/4], got 1/{inv_eps}"
            )));
        }
        if per_period == 0 || m2 == 0 {
            return Err(Error::InvalidGrid("element counts must be positive".into()));
        }
        let grid = RodGrid {
            eps: 1.0 / inv_eps as f64,
            inv_eps,
            per_period,
            m1: 2 * inv_eps * per_period,
            m2,
        };
        let (hx, hy) = (2.0 / grid.m1 as f64, grid.eps / m2 as f64);
        let ratio = hx.max(hy) / hx.min(hy);
        if ratio > MAX_ASPECT_RATIO {
            return Err(Error::AspectRatio {
                ratio,
                limit: MAX_ASPECT_RATIO,
            });
        }
        Ok(grid)
    }

    /// Node index of `(i, j)`, `0 <= i <= m1`, `0 <= j <= m2`, `x2` fastest.
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * (self.m2 + 1) + j
    }

    /// Nodes on the bases `x1 = ±1`.
    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        let mut d: Vec<usize> = (0..=self.m2).map(|j| self.node(0, j)).collect();
        d.extend((0..=self.m2).map(|j| self.node(self.m1, j)));
        d
    }

    pub fn hx(&self) -> f64 {
        2.0 / self.m1 as f64
    }

    pub fn hy(&self) -> f64 {
        self.eps / self.m2 as f64
    }

    /// Fast (cell) coordinates of node `(i, j)`; `y1` in `[0, 1)`.
    pub fn node_fast(&self, i: usize, j: usize) -> [f64; 2] {
        [
            (i % self.per_period) as f64 / self.per_period as f64,
            j as f64 / self.m2 as f64,
        ]
    }
}

impl QuadMesh for RodGrid {
    fn n_dofs(&self) -> usize {
        (self.m1 + 1) * (self.m2 + 1)
    }

    fn n_elements(&self) -> usize {
        self.m1 * self.m2
    }

    fn element(&self, e: usize) -> Element {
        let i = e / self.m2;
        let j = e % self.m2;
        let (hx, hy) = (self.hx(), self.hy());
        Element {
            origin: [-1.0 + i as f64 * hx, j as f64 * hy],
            size: [hx, hy],
            fast_origin: [
                (i % self.per_period) as f64 / self.per_period as f64,
                j as f64 / self.m2 as f64,
            ],
            fast_size: [1.0 / self.per_period as f64, 1.0 / self.m2 as f64],
            dofs: [
                self.node(i, j),
                self.node(i + 1, j),
                self.node(i + 1, j + 1),
                self.node(i, j + 1),
            ],
        }
    }

    fn dof_coords(&self) -> Vec<[f64; 2]> {
        let (hx, hy) = (self.hx(), self.hy());
        let mut c = Vec::with_capacity(self.n_dofs());
        for i in 0..=self.m1 {
            for j in 0..=self.m2 {
                c.push([-1.0 + i as f64 * hx, j as f64 * hy]);
            }
        }
        c
    }
}
