//! Deterministic iterative linear algebra over matrix-free symmetric
//! operators acting on free-DOF coordinate vectors.

mod cg;
mod dense;
mod lanczos;

pub use cg::{cg_solve, cg_solve_deflated, SolveReport};
pub use dense::{dense_eigen_oracle, materialize, DenseOracleReport};
pub use lanczos::{largest_eigenvalue_estimate, orthonormalize, smallest_eigenpairs, EigenOptions, EigenReport};

/// A symmetric linear map on `R^dim`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

/// Dense row-major symmetric matrix, mostly for tests and small problems.
pub struct DenseOperator {
    n: usize,
    entries: Vec<f64>,
}

impl DenseOperator {
    pub fn new(n: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), n * n, "dense operator needs n*n entries");
        Self { n, entries }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        Self::new(n, (0..n * n).map(|k| f(k / n, k % n)).collect())
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.entries[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Dirichlet finite-difference Laplacian `sum_a D_a^t D_a` on a full
/// tensor grid of interior points with spacing `h`.
pub struct GridLaplacian {
    pub shape: Vec<usize>,
    pub h: f64,
}

impl LinearOperator for GridLaplacian {
    fn dim(&self) -> usize {
        self.shape.iter().product()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let dim = self.shape.len();
        let mut strides = vec![1; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.shape[a + 1];
        }
        let inv_h2 = 1.0 / (self.h * self.h);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 2.0 * dim as f64 * x[i];
            for a in 0..dim {
                let c = (i / strides[a]) % self.shape[a];
                if c > 0 {
                    acc -= x[i - strides[a]];
                }
                if c + 1 < self.shape[a] {
                    acc -= x[i + strides[a]];
                }
            }
            *yi = acc * inv_h2;
        }
    }
}
