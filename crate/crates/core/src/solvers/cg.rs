use serde::Serialize;

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::summation::{axpy, dot, norm};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `|A x - b| / |b|`, recomputed from the returned iterate.
    pub residual: f64,
    pub converged: bool,
    pub tolerance: f64,
}

/// Conjugate gradients from `x0 = 0`. Works on symmetric positive
/// semidefinite operators as long as `b` lies in the range; the iterates
/// then stay in the range as well.
pub fn cg_solve(a: &dyn LinearOperator, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    cg_solve_deflated(a, b, &[], tol, max_iter)
}

/// CG restricted to the orthogonal complement of `deflation` (orthonormal
/// vectors), e.g. a known kernel.
pub fn cg_solve_deflated(
    a: &dyn LinearOperator,
    b: &[f64],
    deflation: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::Incompatible(format!("right-hand side of length {} for dimension {n}", b.len())));
    }
    let project = |v: &mut [f64]| {
        for q in deflation {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    };
    let mut rhs = b.to_vec();
    project(&mut rhs);
    let b_norm = norm(&rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, SolveReport { iterations: 0, residual: 0.0, converged: true, tolerance: tol }));
    }
    let mut iterations = 0;
    let mut ap = vec![0.0; n];
    let mut true_res = f64::INFINITY;
    // restarts recompute the residual explicitly when the recurrence has
    // drifted away from it
    for _restart in 0..4 {
        a.apply(&x, &mut ap);
        project(&mut ap);
        let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(u, v)| u - v).collect();
        let mut rr = dot(&r, &r);
        true_res = rr.sqrt() / b_norm;
        if !true_res.is_finite() {
            return Err(Error::NumericalBreakdown("non-finite CG residual".into()));
        }
        if true_res <= tol || iterations >= max_iter {
            break;
        }
        let mut p = r.clone();
        while iterations < max_iter && rr.sqrt() > tol * b_norm {
            a.apply(&p, &mut ap);
            project(&mut ap);
            let pap = dot(&p, &ap);
            if !pap.is_finite() || !rr.is_finite() {
                return Err(Error::NumericalBreakdown(format!("non-finite value in CG at iteration {iterations}")));
            }
            if pap <= 0.0 {
                // direction in the kernel: b was not in the range
                break;
            }
            let alpha = rr / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta * *pi;
            }
            iterations += 1;
        }
    }
    let converged = true_res <= tol;
    Ok((x, SolveReport { iterations, residual: true_res, converged, tolerance: tol }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_vector;
    use crate::solvers::{GridLaplacian, Identity};

    #[test]
    fn identity_in_one_iteration() {
        let b = random_vector(50, 1);
        let (x, rep) = cg_solve(&Identity(50), &b, 1e-12, 10).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert!(x.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-15));
    }

    #[test]
    fn tridiagonal_matches_dense_solve() {
        // oracle: tridiagonal Gauss elimination for 16 * [2 -1 0; -1 2 -1; 0 -1 2] x = (1, 0, 0)
        let (a, d) = (-16.0, 32.0);
        let b = [1.0, 0.0, 0.0];
        let c = [a, a, 0.0];
        let mut diag = [d, d, d];
        let mut rhs = b;
        for i in 1..3 {
            let m = a / diag[i - 1];
            diag[i] -= m * c[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        let mut exact = [0.0; 3];
        exact[2] = rhs[2] / diag[2];
        for i in (0..2).rev() {
            exact[i] = (rhs[i] - c[i] * exact[i + 1]) / diag[i];
        }
        let op = GridLaplacian { shape: vec![3], h: 0.25 };
        let (x, rep) = cg_solve(&op, &b, 1e-14, 50).unwrap();
        assert!(rep.converged);
        for (u, v) in x.iter().zip(exact) {
            assert!((u - v).abs() < 1e-10);
        }
        assert!((exact[0] - 3.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn recovers_known_solution() {
        let op = GridLaplacian { shape: vec![15, 15, 15], h: 1.0 / 16.0 };
        let x0 = random_vector(op.dim(), 7);
        let b = op.apply_vec(&x0);
        let (x, rep) = cg_solve(&op, &b, 1e-12, 2000).unwrap();
        assert!(rep.converged, "{rep:?}");
        let err: f64 = x.iter().zip(&x0).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-9 * norm(&x0));
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let op = GridLaplacian { shape: vec![40, 40], h: 1.0 / 41.0 };
        let b = random_vector(op.dim(), 2);
        let (_, rep) = cg_solve(&op, &b, 1e-14, 3).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
    }

    #[test]
    fn nan_is_a_breakdown() {
        let op = GridLaplacian { shape: vec![5], h: 0.1 };
        let mut b = vec![1.0; 5];
        b[2] = f64::NAN;
        assert!(matches!(cg_solve(&op, &b, 1e-10, 10), Err(Error::NumericalBreakdown(_))));
    }
}
