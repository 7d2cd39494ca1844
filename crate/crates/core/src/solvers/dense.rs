//! Dense reference eigensolver for small operators.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::lanczos::orthonormalize;
use super::LinearOperator;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct DenseOracleReport {
    /// Ascending eigenvalues on the complement of the deflation space.
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    /// `max |A - A^t|` relative to `max |A|`.
    pub symmetry_defect: f64,
    pub dofs: usize,
    pub deflation_dimension: usize,
}

/// Column-by-column image of the unit vectors.
pub fn materialize(a: &dyn LinearOperator) -> DMatrix<f64> {
    let n = a.dim();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        a.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Full spectrum of `a` restricted to the orthogonal complement of
/// `deflation`. Refuses operators with more than `dof_limit` unknowns.
pub fn dense_eigen_oracle(
    a: &dyn LinearOperator,
    deflation: &[Vec<f64>],
    dof_limit: usize,
) -> Result<DenseOracleReport> {
    let n = a.dim();
    if n > dof_limit {
        return Err(Error::TooManyDofs { dofs: n, limit: dof_limit });
    }
    let defl = orthonormalize(deflation)?;
    let m = materialize(a);
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let symmetry_defect = (&m - m.transpose()).amax() / scale;
    let sym = (&m + m.transpose()) * 0.5;

    // P A P on the complement; the deflated directions are shifted above
    // the spectrum and dropped afterwards
    let mut p = DMatrix::<f64>::identity(n, n);
    for q in &defl {
        let v = DMatrix::from_column_slice(n, 1, q);
        p -= &v * v.transpose();
    }
    let projected = &p * sym * &p;
    let eig = SymmetricEigen::new(projected);
    let mut order: Vec<usize> = (0..n).collect();
    // deflated directions are identified by their overlap with the
    // deflation space rather than by a shift
    order.retain(|&c| {
        let col = eig.eigenvectors.column(c);
        let overlap: f64 = defl.iter().map(|q| q.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>().powi(2)).sum();
        overlap < 0.5
    });
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    order.truncate(n - defl.len());
    Ok(DenseOracleReport {
        eigenvalues: order.iter().map(|&c| eig.eigenvalues[c]).collect(),
        eigenvectors: order.iter().map(|&c| eig.eigenvectors.column(c).iter().copied().collect()).collect(),
        symmetry_defect,
        dofs: n,
        deflation_dimension: defl.len(),
    })
}
