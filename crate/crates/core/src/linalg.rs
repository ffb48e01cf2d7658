//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Largest condition number accepted before a moment matrix counts as degenerate.
pub const MAX_CONDITION: f64 = 1e12;

/// Eigenvalues below this are treated as zero when counting rank.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let m = a.nrows();
        if m == 0 {
            return Self {
                values: DVector::zeros(0),
                vectors: DMatrix::zeros(0, 0),
            };
        }
        let eig = SymmetricEigen::new(a.clone());
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let values = DVector::from_iterator(m, order.iter().map(|&i| eig.eigenvalues[i]));
        let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
        Self { values, vectors }
    }

    /// Ratio of the largest to the smallest eigenvalue; infinite when the
    /// smallest is not strictly positive.
    pub fn condition_number(&self) -> f64 {
        let n = self.values.len();
        if n == 0 {
            return f64::INFINITY;
        }
        let max = self.values[0];
        let min = self.values[n - 1];
        if min <= 0.0 || max <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn positive_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > EIGEN_FLOOR).count()
    }
}

pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    SortedEigen::new(a).condition_number()
}

pub fn cholesky_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|c| c.solve(b))
}

/// Copy of `a` restricted to the rows and columns in `idx`.
pub fn submatrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])])
}

pub fn subvector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

pub fn symmetrize(a: &mut DMatrix<f64>) {
    let m = a.nrows();
    for i in 0..m {
        for j in (i + 1)..m {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
