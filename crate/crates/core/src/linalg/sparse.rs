//! Compressed sparse row storage for the assembled operator family.

use faer::Mat;

use crate::scalar::Scalar;

/// Coordinate-format accumulator. Duplicate entries are summed on build.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> SparseMatrix {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(self.entries.len());
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                rows.push(r);
                last = Some((r, c));
            }
        }
        // drop exact cancellations so nonzero counts reflect structure
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        }
    }
}

/// Real CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Triplets::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut t = Triplets::new(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            t.push(i, i, v);
        }
        t.build()
    }

    pub fn from_dense(m: &Mat<f64>) -> Self {
        let mut t = Triplets::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        t.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values stored in row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn mul_vec<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.ncols, "matrix-vector dimension mismatch");
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .zip(vals)
                    .fold(S::zero_value(), |acc, (&j, &v)| acc + x[j] * v)
            })
            .collect()
    }

    /// Row `i` applied to `x`.
    pub fn row_dot<S: Scalar>(&self, i: usize, x: &[S]) -> S {
        let (cols, vals) = self.row(i);
        cols.iter()
            .zip(vals)
            .fold(S::zero_value(), |acc, (&j, &v)| acc + x[j] * v)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = Triplets::new(self.ncols, self.nrows);
        for (i, j, v) in self.iter() {
            t.push(j, i, v);
        }
        t.build()
    }

    /// Stacks blocks with equal column counts on top of each other.
    pub fn vstack(blocks: &[&SparseMatrix]) -> SparseMatrix {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        let nrows = blocks.iter().map(|b| b.nrows).sum();
        let mut t = Triplets::new(nrows, ncols);
        let mut offset = 0;
        for b in blocks {
            assert_eq!(b.ncols, ncols, "vstack column mismatch");
            for (i, j, v) in b.iter() {
                t.push(offset + i, j, v);
            }
            offset += b.nrows;
        }
        t.build()
    }

    /// Sum of scaled matrices of identical shape.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> SparseMatrix {
        let (nrows, ncols) = terms.first().map_or((0, 0), |t| t.1.shape());
        let mut t = Triplets::new(nrows, ncols);
        for (c, m) in terms {
            assert_eq!(m.shape(), (nrows, ncols), "linear combination shape mismatch");
            for (i, j, v) in m.iter() {
                t.push(i, j, c * v);
            }
        }
        t.build()
    }

    /// Multiplies column `j` by `s[j]`.
    pub fn scale_columns(&self, s: &[f64]) -> SparseMatrix {
        assert_eq!(s.len(), self.ncols);
        let mut t = Triplets::new(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            t.push(i, j, v * s[j]);
        }
        t.build()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_cancellations_dropped() {
        let mut t = Triplets::new(2, 3);
        t.push(0, 1, 1.5);
        t.push(0, 1, 0.5);
        t.push(1, 2, 1.0);
        t.push(1, 2, -1.0);
        t.push(1, 0, 3.0);
        let m = t.build();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn vstack_and_matvec() {
        let a = SparseMatrix::identity(2);
        let b = SparseMatrix::from_diagonal(&[2.0, 3.0]);
        let s = SparseMatrix::vstack(&[&a, &b]);
        assert_eq!(s.shape(), (4, 2));
        assert_eq!(s.mul_vec(&[1.0, 1.0]), vec![1.0, 1.0, 2.0, 3.0]);
        assert_eq!(s.transpose().shape(), (2, 4));
    }
}
