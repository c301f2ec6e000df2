use crate::error::{Error, Result};
use crate::fem::SparseSym;

/// Pivots at or below this fraction of the original diagonal are rejected.
const PIVOT_FLOOR: f64 = 1e-13;

/// Envelope (skyline) Cholesky factor `S = L Lᵀ`.
///
/// Row `i` of `L` is stored densely over columns `first[i]..=i`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl Cholesky {
    pub fn factor(s: &SparseSym) -> Result<Self> {
        let n = s.dim();
        let mut first: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for (j, _) in s.row_upper(i) {
                first[j] = first[j].min(i);
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut len = 0;
        for i in 0..n {
            start.push(len);
            len += i - first[i] + 1;
        }
        start.push(len);
        let mut data = vec![0.0; len];
        for i in 0..n {
            for (j, v) in s.row_upper(i) {
                data[start[j] + (i - first[j])] = v;
            }
        }

        for i in 0..n {
            let fi = first[i];
            let si = start[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (head, tail) = data.split_at_mut(si);
                let row_j = &head[start[j] + (lo - fj)..start[j] + (j - fj)];
                let row_i = &mut tail[..=(i - fi)];
                let dotp: f64 = row_i[lo - fi..j - fi]
                    .iter()
                    .zip(row_j)
                    .map(|(a, b)| a * b)
                    .sum();
                let ljj = head[start[j] + (j - fj)];
                row_i[j - fi] = (row_i[j - fi] - dotp) / ljj;
            }
            let row = &mut data[si..=si + (i - fi)];
            let original = row[i - fi];
            let sq: f64 = row[..i - fi].iter().map(|v| v * v).sum();
            let pivot = original - sq;
            if !pivot.is_finite() || pivot <= PIVOT_FLOOR * original.abs() || pivot <= 0.0 {
                return Err(Error::NotSpd { row: i, pivot });
            }
            row[i - fi] = pivot.sqrt();
        }
        Ok(Cholesky {
            n,
            first,
            start,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L`.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.start[i]..self.start[i + 1]]
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let fi = self.first[i];
            let row = self.row(i);
            let d = i - fi;
            let s: f64 = row[..d].iter().zip(&b[fi..i]).map(|(l, x)| l * x).sum();
            b[i] = (b[i] - s) / row[d];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            let d = i - fi;
            b[i] /= row[d];
            let xi = b[i];
            for (l, x) in row[..d].iter().zip(&mut b[fi..i]) {
                *x -= l * xi;
            }
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.solve_lower_in_place(b);
        self.solve_upper_in_place(b);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// `L x`.
    pub fn mul_lower(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let fi = self.first[i];
                self.row(i).iter().zip(&x[fi..=i]).map(|(l, v)| l * v).sum()
            })
            .collect()
    }

    /// `Lᵀ x`.
    pub fn mul_upper(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let fi = self.first[i];
            for (l, out) in self.row(i).iter().zip(&mut y[fi..=i]) {
                *out += l * x[i];
            }
        }
        y
    }
}
