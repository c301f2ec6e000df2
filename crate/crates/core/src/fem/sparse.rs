use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric sparse matrix, upper triangle stored in compressed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    /// Builds from `(i, j, v)` entries with `i <= j`; duplicates are summed in
    /// input order, so equal input gives bit-identical output.
    pub fn from_upper_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, _) in &triplets {
            if i > j || j >= n {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {j}) is not in the upper triangle of a {n}x{n} matrix"
                )));
            }
        }
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let m = SparseSym { n, row_ptr, cols, vals };
        m.check_finite()?;
        Ok(m)
    }

    /// Builds from a full symmetric listing, keeping the upper triangle.
    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                if a[(i, j)] != 0.0 || i == j {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_upper_triplets(n, t)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        SparseSym {
            n: d.len(),
            row_ptr: (0..=d.len()).collect(),
            cols: (0..d.len()).collect(),
            vals: d.to_vec(),
        }
    }

    fn check_finite(&self) -> Result<()> {
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if !self.vals[k].is_finite() {
                    return Err(Error::NonFinite {
                        row: i,
                        col: self.cols[k],
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_upper(&self) -> usize {
        self.vals.len()
    }

    /// Upper-triangle entries of row `i` as `(col, value)`.
    pub fn row_upper(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let xi = x[i];
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                let v = self.vals[k];
                acc += v * x[j];
                if j != i {
                    y[j] += v * xi;
                }
            }
            y[i] += acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ S y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// `self + s * other` on the union pattern.
    pub fn add_scaled(&self, other: &SparseSym, s: f64) -> Result<SparseSym> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.n, self.n, other.n, other.n
            )));
        }
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.vals.len().max(other.vals.len()));
        let mut vals = Vec::with_capacity(cols.capacity());
        for i in 0..self.n {
            let mut a = self.row_upper(i).peekable();
            let mut b = other.row_upper(i).peekable();
            loop {
                let (c, v) = match (a.peek(), b.peek()) {
                    (None, None) => break,
                    (Some(&(ca, va)), None) => {
                        a.next();
                        (ca, va)
                    }
                    (None, Some(&(cb, vb))) => {
                        b.next();
                        (cb, s * vb)
                    }
                    (Some(&(ca, va)), Some(&(cb, vb))) => {
                        if ca == cb {
                            a.next();
                            b.next();
                            (ca, va + s * vb)
                        } else if ca < cb {
                            a.next();
                            (ca, va)
                        } else {
                            b.next();
                            (cb, s * vb)
                        }
                    }
                };
                cols.push(c);
                vals.push(v);
            }
            row_ptr[i + 1] = cols.len();
        }
        let m = SparseSym { n: self.n, row_ptr, cols, vals };
        m.check_finite()?;
        Ok(m)
    }

    pub fn scaled(&self, s: f64) -> SparseSym {
        let mut m = self.clone();
        m.vals.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// Principal submatrix on the sorted index set `keep`.
    pub fn submatrix(&self, keep: &[usize]) -> SparseSym {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = vec![0usize; keep.len() + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            for (c, v) in self.row_upper(old_i) {
                let nc = map[c];
                if nc != usize::MAX {
                    cols.push(nc);
                    vals.push(v);
                }
            }
            row_ptr[new_i + 1] = cols.len();
        }
        SparseSym {
            n: keep.len(),
            row_ptr,
            cols,
            vals,
        }
    }

    /// Lower bound on the smallest eigenvalue from Gershgorin discs.
    pub fn gershgorin_lower(&self) -> f64 {
        let mut radius = vec![0.0; self.n];
        let mut center = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row_upper(i) {
                if j == i {
                    center[i] = v;
                } else {
                    radius[i] += v.abs();
                    radius[j] += v.abs();
                }
            }
        }
        center
            .iter()
            .zip(&radius)
            .map(|(c, r)| c - r)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row_upper(i) {
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        d
    }

    /// Matrix Market `coordinate real symmetric` (lower triangle, 1-based).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.vals.len())?;
        for i in 0..self.n {
            for (j, v) in self.row_upper(i) {
                writeln!(w, "{} {} {:e}", j + 1, i + 1, v)?;
            }
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
