//! Factorizations, linear solves and the generalized eigensolver.

mod eigs;
mod sparse;

pub use eigs::{generalized_eigs, EigOptions, EigPair};
pub use sparse::{SparseMatrix, Triplets};

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense LU with partial pivoting and determinant bookkeeping.
pub struct DenseLu<S: Scalar> {
    lu: PartialPivLu<S>,
    parity: i8,
    singular: bool,
}

impl<S: Scalar> DenseLu<S> {
    /// Factors `a` without rejecting singular input, so determinants can
    /// still be evaluated near a root.
    pub fn new(a: &Mat<S>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "LU of a non-square matrix");
        let n = a.nrows();
        let lu = a.partial_piv_lu();
        let (fwd, _) = lu.P().arrays();
        let parity = permutation_parity(fwd);
        let scale = (0..n)
            .flat_map(|j| (0..n).map(move |i| (i, j)))
            .fold(0.0_f64, |m, (i, j)| m.max(a[(i, j)].modulus()));
        let tol = n as f64 * f64::EPSILON * scale;
        let u = lu.U();
        let singular = scale == 0.0 || (0..n).any(|i| u[(i, i)].modulus() <= tol);
        Self {
            lu,
            parity,
            singular,
        }
    }

    pub fn dim(&self) -> usize {
        self.lu.U().nrows()
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn determinant(&self) -> S {
        let u = self.lu.U();
        let mut d = S::from_f64(self.parity as f64);
        for i in 0..u.nrows() {
            d *= u[(i, i)];
        }
        d
    }

    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        if self.singular {
            return Err(Error::Singular("dense solve".into()));
        }
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension {
                context: "dense solve",
                expected: n,
                got: b.len(),
            });
        }
        let mut rhs = Mat::<S>::from_fn(n, 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        Ok((0..n).map(|i| rhs[(i, 0)]).collect())
    }

    pub fn solve_mat(&self, b: &Mat<S>) -> Result<Mat<S>> {
        if self.singular {
            return Err(Error::Singular("dense solve".into()));
        }
        let mut rhs = b.clone();
        self.lu.solve_in_place(rhs.as_mut());
        Ok(rhs)
    }
}

impl DenseLu<f64> {
    /// Sign of the determinant: permutation parity times the signs of the
    /// pivots. Zero when the matrix is numerically singular.
    pub fn det_sign(&self) -> i8 {
        if self.singular {
            return 0;
        }
        let u = self.lu.U();
        let negatives = (0..u.nrows()).filter(|&i| u[(i, i)] < 0.0).count();
        if negatives % 2 == 0 {
            self.parity
        } else {
            -self.parity
        }
    }
}

/// Factors `a`, failing on numerically singular matrices.
pub fn factorize<S: Scalar>(a: &Mat<S>) -> Result<DenseLu<S>> {
    let lu = DenseLu::new(a);
    if lu.is_singular() {
        Err(Error::Singular(format!("{0}x{0} dense factorization", a.nrows())))
    } else {
        Ok(lu)
    }
}

/// One-shot dense solve.
pub fn solve_dense<S: Scalar>(a: &Mat<S>, b: &[S]) -> Result<Vec<S>> {
    factorize(a)?.solve(b)
}

/// Determinant of a small dense matrix.
pub fn determinant<S: Scalar>(a: &Mat<S>) -> S {
    if a.nrows() == 0 {
        return S::from_f64(1.0);
    }
    DenseLu::new(a).determinant()
}

fn permutation_parity(p: &[usize]) -> i8 {
    let mut seen = vec![false; p.len()];
    let mut parity = 1i8;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        if len % 2 == 0 {
            parity = -parity;
        }
    }
    parity
}

/// Sparse LU of a linear combination of real sparse matrices with scalar
/// coefficients.
pub struct SparseLu<S: Scalar> {
    lu: Lu<usize, S>,
    n: usize,
}

impl<S: Scalar> SparseLu<S> {
    pub fn new(terms: &[(S, &SparseMatrix)]) -> Result<Self> {
        let matrix = combine(terms)?;
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::Dimension {
                context: "sparse factorization",
                expected: n,
                got: matrix.ncols(),
            });
        }
        let lu = matrix
            .sp_lu()
            .map_err(|e| Error::Singular(format!("sparse factorization: {e}")))?;
        Ok(Self { lu, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        if b.len() != self.n {
            return Err(Error::Dimension {
                context: "sparse solve",
                expected: self.n,
                got: b.len(),
            });
        }
        let mut rhs = Mat::<S>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        let x: Vec<S> = (0..self.n).map(|i| rhs[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite_value()) {
            return Err(Error::Singular("sparse solve produced non-finite values".into()));
        }
        Ok(x)
    }
}

fn combine<S: Scalar>(terms: &[(S, &SparseMatrix)]) -> Result<SparseColMat<usize, S>> {
    let (nrows, ncols) = terms.first().map_or((0, 0), |t| t.1.shape());
    let mut trip = Vec::new();
    for (c, m) in terms {
        if m.shape() != (nrows, ncols) {
            return Err(Error::Dimension {
                context: "matrix combination",
                expected: nrows,
                got: m.nrows(),
            });
        }
        for (i, j, v) in m.iter() {
            trip.push(Triplet::new(i, j, *c * v));
        }
    }
    SparseColMat::try_new_from_triplets(nrows, ncols, &trip)
        .map_err(|e| Error::InvalidArgument(format!("sparse assembly: {e:?}")))
}

/// Dense copy of a real combination of sparse matrices.
pub fn dense_combination<S: Scalar>(terms: &[(S, &SparseMatrix)], n_rows: usize, n_cols: usize) -> Mat<S> {
    let mut m = Mat::<S>::zeros(n_rows, n_cols);
    for (c, a) in terms {
        for (i, j, v) in a.iter() {
            m[(i, j)] += *c * v;
        }
    }
    m
}

pub fn to_dense_scalar<S: Scalar>(a: &SparseMatrix) -> Mat<S> {
    dense_combination(&[(S::from_f64(1.0), a)], a.nrows(), a.ncols())
}

pub fn mat_vec<S: Scalar>(a: &Mat<S>, x: &[S]) -> Vec<S> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).fold(S::zero_value(), |acc, j| acc + a[(i, j)] * x[j]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_sign_examples() {
        let id = Mat::<f64>::identity(3, 3);
        assert_eq!(factorize(&id).unwrap().det_sign(), 1);
        let mut d = Mat::<f64>::zeros(2, 2);
        d[(0, 0)] = 1.0;
        d[(1, 1)] = -2.0;
        assert_eq!(factorize(&d).unwrap().det_sign(), -1);
        let mut s = Mat::<f64>::zeros(2, 2);
        s[(0, 1)] = 1.0;
        s[(1, 0)] = 1.0;
        assert_eq!(factorize(&s).unwrap().det_sign(), -1);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut a = Mat::<f64>::zeros(2, 2);
        a[(0, 0)] = 1.0;
        a[(0, 1)] = 2.0;
        a[(1, 0)] = 2.0;
        a[(1, 1)] = 4.0;
        assert!(matches!(factorize(&a), Err(Error::Singular(_))));
    }

    #[test]
    fn diagonal_solves() {
        let a = SparseMatrix::from_diagonal(&[2.0, 4.0]);
        let lu = SparseLu::<f64>::new(&[(1.0, &a)]).unwrap();
        assert_eq!(lu.solve(&[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
        let x = solve_dense(&a.to_dense(), &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_right_hand_side() {
        use num_complex::Complex64;
        let a = SparseMatrix::identity(3);
        let b = vec![Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0), Complex64::new(3.0, 0.5)];
        let lu = SparseLu::<Complex64>::new(&[(Complex64::new(1.0, 0.0), &a)]).unwrap();
        assert_eq!(lu.solve(&b).unwrap(), b);
    }
}
