//! Smallest eigenpairs of symmetric positive semidefinite operators by
//! thick-restart Lanczos with full reorthogonalization.
//!
//! Pairs are found one at a time. Each converged eigenvector is locked:
//! later runs start from a fresh seeded vector and stay orthogonal to the
//! deflation space and to every locked vector, so repeated eigenvalues
//! (e.g. a kernel of dimension > 1) are resolved one copy per run.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::field::random_vector;
use crate::summation::{axpy, dot, norm, scale};

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Residual bound relative to the spectral scale: a pair is accepted
    /// when `|A v - lambda v| <= tol * lambda_ref` for unit `v`.
    pub tol: f64,
    pub max_basis: usize,
    pub keep: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_basis: 120, keep: 24, max_restarts: 400, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    /// `|A v - lambda v| / |v|` for each pair.
    pub residuals: Vec<f64>,
    pub deflation_dimension: usize,
    pub converged: bool,
    /// Largest-eigenvalue estimate used to scale tolerances.
    pub lambda_ref: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub matvecs: usize,
}

/// Modified Gram-Schmidt, two passes. Fails when a vector is (nearly) in
/// the span of the previous ones.
pub fn orthonormalize(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let original = norm(v);
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let nw = norm(&w);
        if original.is_nan() || original <= 0.0 || nw <= 1e-10 * original {
            return Err(Error::IllPosedDeflation { index });
        }
        scale(1.0 / nw, &mut w);
        out.push(w);
    }
    Ok(out)
}

fn project_out(basis: &[Vec<f64>], v: &mut [f64]) {
    for q in basis {
        let c = dot(q, v);
        axpy(-c, q, v);
    }
}

/// Rayleigh quotient of a few power iterations on the deflated operator.
pub fn largest_eigenvalue_estimate(
    a: &dyn LinearOperator,
    deflation: &[Vec<f64>],
    iterations: usize,
    seed: u64,
) -> f64 {
    let n = a.dim();
    let mut x = random_vector(n, seed ^ 0x9e37_79b9_7f4a_7c15);
    project_out(deflation, &mut x);
    let mut y = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..iterations.max(1) {
        let nx = norm(&x);
        if nx == 0.0 {
            return 0.0;
        }
        scale(1.0 / nx, &mut x);
        a.apply(&x, &mut y);
        project_out(deflation, &mut y);
        lambda = dot(&x, &y);
        std::mem::swap(&mut x, &mut y);
    }
    lambda
}

/// Sign convention for reproducible eigenvectors: the entry of largest
/// magnitude is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        scale(-1.0, v);
    }
}

struct Pair {
    value: f64,
    vector: Vec<f64>,
    converged: bool,
}

struct Workspace<'a> {
    a: &'a dyn LinearOperator,
    constraints: Vec<Vec<f64>>,
    shift: f64,
    matvecs: usize,
}

impl Workspace<'_> {
    /// `P A P + shift * Q Q^t` with `Q` the constraints: constrained
    /// directions sit above the spectrum, so rounding drift toward them is
    /// never mistaken for a small eigenvalue.
    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        let mut px = x.to_vec();
        let coeffs: Vec<f64> = self.constraints.iter().map(|q| dot(q, x)).collect();
        for (c, q) in coeffs.iter().zip(&self.constraints) {
            axpy(-c, q, &mut px);
        }
        self.a.apply(&px, y);
        project_out(&self.constraints, y);
        for (c, q) in coeffs.iter().zip(&self.constraints) {
            axpy(self.shift * c, q, y);
        }
        self.matvecs += 1;
    }

    /// Fresh start vector orthogonal to the constraints and `extra`.
    fn start_vector(&self, extra: &[Vec<f64>], seed: u64) -> Option<Vec<f64>> {
        let mut v = random_vector(self.a.dim(), seed);
        let original = norm(&v);
        for _ in 0..2 {
            project_out(&self.constraints, &mut v);
            project_out(extra, &mut v);
        }
        let nv = norm(&v);
        if nv <= 1e-8 * original {
            return None;
        }
        scale(1.0 / nv, &mut v);
        Some(v)
    }

    fn smallest(&mut self, opts: &EigenOptions, abs_tol: f64, seed: u64) -> Result<Option<Pair>> {
        let n = self.a.dim();
        let m_max = opts.max_basis.max(4);
        let keep = opts.keep.clamp(1, m_max - 2);
        let Some(v0) = self.start_vector(&[], seed) else {
            return Ok(None);
        };
        let mut basis: Vec<Vec<f64>> = vec![v0];
        let mut h = DMatrix::<f64>::zeros(m_max, m_max);
        let mut expanded = 0usize;
        let mut coupling = 0.0;
        let mut reseed = seed;
        let mut w = vec![0.0; n];
        let mut best: Option<Pair> = None;

        for _cycle in 0..opts.max_restarts.max(1) {
            let mut exhausted = false;
            while expanded < m_max && expanded < basis.len() {
                let j = expanded;
                self.apply(&basis[j], &mut w);
                let mut coeffs = vec![0.0; basis.len()];
                // a second pass only when the first one cancelled most of
                // the vector
                let mut before = norm(&w);
                for _ in 0..2 {
                    for (i, q) in basis.iter().enumerate() {
                        let c = dot(q, &w);
                        coeffs[i] += c;
                        axpy(-c, q, &mut w);
                    }
                    let after = norm(&w);
                    if after > 0.7 * before {
                        break;
                    }
                    before = after;
                }
                for i in 0..=j {
                    h[(i, j)] = coeffs[i];
                    h[(j, i)] = coeffs[i];
                }
                expanded += 1;
                let beta = norm(&w);
                if !beta.is_finite() {
                    return Err(Error::NumericalBreakdown("non-finite Lanczos vector".into()));
                }
                if basis.len() > j + 1 {
                    // the next vector already exists (after a restart)
                    continue;
                }
                if beta <= 1e-13 * abs_tol.max(f64::MIN_POSITIVE) / opts.tol.max(1e-300) {
                    // invariant subspace: continue with a new direction
                    reseed = reseed.wrapping_add(0x2545_f491_4f6c_dd1d);
                    match self.start_vector(&basis, reseed) {
                        Some(v) => basis.push(v),
                        None => {
                            exhausted = true;
                            coupling = 0.0;
                            break;
                        }
                    }
                } else {
                    scale(1.0 / beta, &mut w);
                    basis.push(w.clone());
                    coupling = beta;
                }
            }

            let m = expanded;
            let sub = h.view((0, 0), (m, m)).into_owned();
            let eig = SymmetricEigen::new(sub);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
            let i0 = order[0];
            let _theta = eig.eigenvalues[i0];
            let estimate =
                if exhausted || basis.len() == m { 0.0 } else { (coupling * eig.eigenvectors[(m - 1, i0)]).abs() };

            if estimate <= abs_tol {
                let mut y = vec![0.0; n];
                for l in 0..m {
                    axpy(eig.eigenvectors[(l, i0)], &basis[l], &mut y);
                }
                project_out(&self.constraints, &mut y);
                let ny = norm(&y);
                scale(1.0 / ny, &mut y);
                let mut ay = vec![0.0; n];
                self.apply(&y, &mut ay);
                let rq = dot(&y, &ay);
                axpy(-rq, &y, &mut ay);
                let res = norm(&ay);
                if res <= abs_tol || exhausted {
                    fix_sign(&mut y);
                    return Ok(Some(Pair { value: rq, vector: y, converged: res <= abs_tol }));
                }
                best = Some(Pair { value: rq, vector: y, converged: false });
            }

            if exhausted {
                break;
            }
            // thick restart: keep the `keep` lowest Ritz vectors and the
            // residual direction
            let k = keep.min(m.saturating_sub(1)).max(1);
            let mut kept: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
            for &col in order.iter().take(k) {
                let mut y = vec![0.0; n];
                for l in 0..m {
                    axpy(eig.eigenvectors[(l, col)], &basis[l], &mut y);
                }
                kept.push(y);
            }
            let residual_dir = basis.pop().expect("residual direction");
            h.fill(0.0);
            for (i, &col) in order.iter().take(k).enumerate() {
                h[(i, i)] = eig.eigenvalues[col];
            }
            kept.push(residual_dir);
            basis = kept;
            expanded = k;
        }

        // restart budget exhausted: return the best Ritz pair, flagged
        if best.is_none() {
            let m = expanded.min(basis.len());
            if m > 0 {
                let sub = h.view((0, 0), (m, m)).into_owned();
                let eig = SymmetricEigen::new(sub);
                let i0 = (0..m).min_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y])).unwrap();
                let mut y = vec![0.0; n];
                for l in 0..m {
                    axpy(eig.eigenvectors[(l, i0)], &basis[l], &mut y);
                }
                project_out(&self.constraints, &mut y);
                let ny = norm(&y);
                scale(1.0 / ny, &mut y);
                best = Some(Pair { value: eig.eigenvalues[i0], vector: y, converged: false });
            }
        }
        Ok(best.map(|mut p| {
            fix_sign(&mut p.vector);
            p
        }))
    }
}

/// The `k` smallest eigenpairs of `a` restricted to the orthogonal
/// complement of `deflation`.
pub fn smallest_eigenpairs(
    a: &dyn LinearOperator,
    k: usize,
    deflation: &[Vec<f64>],
    opts: &EigenOptions,
) -> Result<EigenReport> {
    let n = a.dim();
    for d in deflation {
        if d.len() != n {
            return Err(Error::Incompatible(format!("deflation vector of length {} for dimension {n}", d.len())));
        }
    }
    let defl = orthonormalize(deflation)?;
    let lambda_ref = largest_eigenvalue_estimate(a, &defl, 60, opts.seed).abs().max(f64::MIN_POSITIVE);
    let abs_tol = opts.tol * lambda_ref;
    let mut ws = Workspace { a, constraints: defl, shift: 2.0 * lambda_ref, matvecs: 0 };
    let mut pairs: Vec<Pair> = Vec::new();
    for i in 0..k {
        let seed = opts.seed.wrapping_add(i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
        match ws.smallest(opts, abs_tol, seed)? {
            Some(p) => {
                ws.constraints.push(p.vector.clone());
                pairs.push(p);
            }
            None => break,
        }
    }
    let defl_dim = deflation.len();
    pairs.sort_by(|x, y| x.value.total_cmp(&y.value));
    let mut residuals = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let mut ap = a.apply_vec(&p.vector);
        project_out(&ws.constraints[..defl_dim], &mut ap);
        axpy(-p.value, &p.vector, &mut ap);
        residuals.push(norm(&ap));
    }
    let converged = pairs.len() == k && pairs.iter().all(|p| p.converged);
    Ok(EigenReport {
        eigenvalues: pairs.iter().map(|p| p.value).collect(),
        eigenvectors: pairs.into_iter().map(|p| p.vector).collect(),
        residuals,
        deflation_dimension: defl_dim,
        converged,
        lambda_ref,
        tolerance: opts.tol,
        seed: opts.seed,
        matvecs: ws.matvecs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{DenseOperator, GridLaplacian};
    use std::f64::consts::PI;

    #[test]
    fn three_point_laplacian_closed_form() {
        // eigenvalues (2 - 2 cos(k pi / 4)) / h^2 with h = 1/4
        let op = GridLaplacian { shape: vec![3], h: 0.25 };
        let rep = smallest_eigenpairs(&op, 3, &[], &EigenOptions::default()).unwrap();
        assert!(rep.converged);
        for (k, lam) in rep.eigenvalues.iter().enumerate() {
            let exact = 16.0 * (2.0 - 2.0 * ((k + 1) as f64 * PI / 4.0).cos());
            assert!((lam - exact).abs() < 1e-9 * exact, "{lam} vs {exact}");
        }
        assert!((rep.eigenvalues[0] - 16.0 * (2.0 - 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn long_chain_lowest_modes() {
        let n = 200;
        let h = 1.0 / (n + 1) as f64;
        let op = GridLaplacian { shape: vec![n], h };
        let rep = smallest_eigenpairs(&op, 4, &[], &EigenOptions::default()).unwrap();
        assert!(rep.converged);
        for (k, lam) in rep.eigenvalues.iter().enumerate() {
            let exact = (2.0 - 2.0 * ((k + 1) as f64 * PI * h).cos()) / (h * h);
            assert!((lam - exact).abs() < 1e-8 * exact, "k={k}: {lam} vs {exact}");
        }
        for r in &rep.residuals {
            assert!(*r <= 1e-10 * rep.lambda_ref * 1.01);
        }
    }

    #[test]
    fn unit_square_dirichlet_laplacian() {
        let op = GridLaplacian { shape: vec![63, 63], h: 1.0 / 64.0 };
        let rep = smallest_eigenpairs(&op, 1, &[], &EigenOptions::default()).unwrap();
        let target = 2.0 * PI * PI;
        assert!((rep.eigenvalues[0] - target).abs() < 0.02 * target);
    }

    #[test]
    fn repeated_eigenvalue_found_twice() {
        // square grid: lambda_2 = lambda_3 (modes (1,2) and (2,1))
        let op = GridLaplacian { shape: vec![9, 9], h: 0.1 };
        let rep = smallest_eigenpairs(&op, 3, &[], &EigenOptions::default()).unwrap();
        assert!((rep.eigenvalues[1] - rep.eigenvalues[2]).abs() < 1e-8 * rep.eigenvalues[1]);
        assert!(rep.eigenvalues[0] < rep.eigenvalues[1] * 0.9);
    }

    #[test]
    fn deflating_a_known_kernel() {
        // path-graph Laplacian (Neumann-like): kernel = constants
        let n = 30;
        let op = DenseOperator::from_fn(n, |i, j| {
            let deg = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            if i == j {
                deg
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let plain = smallest_eigenpairs(&op, 1, &[], &EigenOptions::default()).unwrap();
        assert!(plain.eigenvalues[0].abs() < 1e-9);
        let ones = vec![1.0; n];
        let rep = smallest_eigenpairs(&op, 1, std::slice::from_ref(&ones), &EigenOptions::default()).unwrap();
        let exact = 2.0 - 2.0 * (PI / n as f64).cos();
        assert!(rep.eigenvalues[0] > 0.0);
        assert!((rep.eigenvalues[0] - exact).abs() < 1e-9);
        assert_eq!(rep.deflation_dimension, 1);

        // the same span, scaled differently
        let scaled = vec![-3.5; n];
        let again = smallest_eigenpairs(&op, 1, &[scaled], &EigenOptions::default()).unwrap();
        assert!((again.eigenvalues[0] - rep.eigenvalues[0]).abs() <= 1e-10 * rep.eigenvalues[0]);

        let dependent = vec![ones.clone(), ones.iter().map(|x| 2.0 * x).collect()];
        assert!(matches!(
            smallest_eigenpairs(&op, 1, &dependent, &EigenOptions::default()),
            Err(Error::IllPosedDeflation { index: 1 })
        ));
    }

    #[test]
    fn small_space_is_exhausted_exactly() {
        let op = DenseOperator::from_fn(5, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let rep = smallest_eigenpairs(&op, 5, &[], &EigenOptions::default()).unwrap();
        assert_eq!(rep.eigenvalues.len(), 5);
        for (k, v) in rep.eigenvalues.iter().enumerate() {
            assert!((v - (k + 1) as f64).abs() < 1e-12);
        }
        // asking for more than the dimension stops at the dimension
        let rep = smallest_eigenpairs(&op, 7, &[], &EigenOptions::default()).unwrap();
        assert_eq!(rep.eigenvalues.len(), 5);
        assert!(!rep.converged);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let op = GridLaplacian { shape: vec![20, 20], h: 0.05 };
        let a = smallest_eigenpairs(&op, 2, &[], &EigenOptions::default()).unwrap();
        let b = smallest_eigenpairs(&op, 2, &[], &EigenOptions::default()).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(a.eigenvectors, b.eigenvectors);
    }
}
