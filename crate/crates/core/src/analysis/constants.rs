//! Spectral constants: Poincare constants `c_{p,q}`, harmonic Dirichlet
//! form counts, and the best constant of the main inequality.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use super::operators::{HodgeOperator, SharpOperator};
use crate::domain::{BcMode, DomainMask, VertexClass};
use crate::error::{Error, Result};
use crate::field::{random_vector, FormField};
use crate::ops::{curl_rows, grad_rows};
use crate::solvers::{largest_eigenvalue_estimate, smallest_eigenpairs, EigenOptions, LinearOperator};

/// Eigenvalues below `KERNEL_THRESHOLD * lambda_ref` count as kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-8;
/// Smallest gap ratio for which a kernel count is trusted.
pub const MIN_GAP_RATIO: f64 = 10.0;
const MAX_KERNEL: usize = 64;

/// Bottom of the spectrum of a quadratic form: its numerical kernel and
/// the first eigenvalue above it.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub kernel_dimension: usize,
    pub kernel_eigenvalues: Vec<f64>,
    /// Smallest eigenvalue on the complement of the kernel; infinite when
    /// the whole space is kernel.
    pub first_nonzero: f64,
    pub threshold: f64,
    /// `first_nonzero / max(largest kernel eigenvalue, threshold)`.
    pub gap_ratio: f64,
    pub reliable: bool,
    pub converged: bool,
    pub lambda_ref: f64,
    pub residual: f64,
    pub dofs: usize,
    pub seed: u64,
    pub matvecs: usize,
    #[serde(skip)]
    pub kernel: Vec<Vec<f64>>,
    #[serde(skip)]
    pub eigenvector: Vec<f64>,
}

/// Peels kernel vectors one at a time: each run finds the smallest
/// eigenpair on the complement of the kernel found so far, which is then
/// passed on as deflation.
pub fn spectrum(op: &dyn LinearOperator, opts: &EigenOptions) -> Result<Spectrum> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidDomain("the boundary-condition space has no degrees of freedom".into()));
    }
    let lambda_ref = largest_eigenvalue_estimate(op, &[], 80, opts.seed).abs().max(f64::MIN_POSITIVE);
    let threshold = KERNEL_THRESHOLD * lambda_ref;
    let mut kernel: Vec<Vec<f64>> = Vec::new();
    let mut kernel_eigenvalues = Vec::new();
    let mut converged = true;
    let mut matvecs = 0;
    let mut residual = 0.0;
    let mut first_nonzero = f64::INFINITY;
    let mut eigenvector = Vec::new();
    while kernel.len() < n {
        let rep = smallest_eigenpairs(op, 1, &kernel, opts)?;
        matvecs += rep.matvecs;
        converged &= rep.converged;
        let (Some(&lambda), Some(vector)) = (rep.eigenvalues.first(), rep.eigenvectors.first()) else {
            break;
        };
        residual = rep.residuals[0];
        if lambda < threshold {
            if kernel.len() >= MAX_KERNEL {
                return Err(Error::NumericalBreakdown(format!("more than {MAX_KERNEL} kernel vectors")));
            }
            kernel_eigenvalues.push(lambda);
            kernel.push(vector.clone());
        } else {
            first_nonzero = lambda;
            eigenvector = vector.clone();
            break;
        }
    }
    let floor = kernel_eigenvalues.iter().fold(threshold, |m: f64, v| m.max(v.abs()));
    let gap_ratio = first_nonzero / floor;
    Ok(Spectrum {
        kernel_dimension: kernel.len(),
        kernel_eigenvalues,
        first_nonzero,
        threshold,
        gap_ratio,
        reliable: gap_ratio >= MIN_GAP_RATIO,
        converged,
        lambda_ref,
        residual,
        dofs: n,
        seed: opts.seed,
        matvecs,
        kernel,
        eigenvector,
    })
}

/// `c_{p,q} = lambda^(-1/2)` for the smallest eigenvalue of
/// `|dE|^2 + |delta E|^2` on the complement of the harmonic forms.
pub fn poincare_q_constant(
    mask: &Arc<DomainMask>,
    q: usize,
    mode: BcMode,
    opts: &EigenOptions,
) -> Result<(f64, Spectrum)> {
    let op = HodgeOperator::new(mask, q, mode)?;
    let spec = spectrum(&op, opts)?;
    Ok((spec.first_nonzero.powf(-0.5), spec))
}

/// Dimension of the harmonic Dirichlet `q`-forms, with the spectrum that
/// certifies it.
pub fn harmonic_dimension(
    mask: &Arc<DomainMask>,
    q: usize,
    mode: BcMode,
    opts: &EigenOptions,
) -> Result<(usize, Spectrum)> {
    let op = HodgeOperator::new(mask, q, mode)?;
    let spec = spectrum(&op, opts)?;
    Ok((spec.kernel_dimension, spec))
}

#[derive(Clone, Debug, Serialize)]
pub struct SharpResult {
    pub c_sharp: f64,
    pub lambda_min: f64,
    pub spectrum: Spectrum,
    /// `(|sym T|^2 + |Curl T|^2) / |T|^2` for a gradient test field; it
    /// bounds `lambda_min` from above and is itself at most 1.
    pub gradient_quotient: f64,
}

/// Best constant `c` in `|T| <= c (|sym T|^2 + |Curl T|^2)^(1/2)` over the
/// discrete tensor space of `mode`.
pub fn sharp_constant(mask: &Arc<DomainMask>, mode: BcMode, opts: &EigenOptions) -> Result<SharpResult> {
    let op = SharpOperator::new(mask, mode)?;
    let spec = spectrum(&op, opts)?;
    if spec.kernel_dimension > 0 {
        return Err(Error::InvariantViolation(format!(
            "|sym T|^2 + |Curl T|^2 has a {}-dimensional kernel",
            spec.kernel_dimension
        )));
    }
    let lambda_min = spec.first_nonzero;
    let gradient_quotient = gradient_quotient(mask, mode, opts.seed)?;
    Ok(SharpResult { c_sharp: lambda_min.powf(-0.5), lambda_min, spectrum: spec, gradient_quotient })
}

/// Rayleigh quotient of `Grad v` for random `v` supported on vertices
/// whose axis neighbours are all interior, so that `Grad v` satisfies the
/// full Dirichlet condition. Returns NaN when no such vertex exists.
fn gradient_quotient(mask: &Arc<DomainMask>, mode: BcMode, seed: u64) -> Result<f64> {
    let dim = mask.dim();
    let nv = mask.num_vertices();
    let deep = |v: usize| -> bool {
        mask.classify(v) == VertexClass::Interior
            && (0..dim).all(|a| {
                let (c, n, s) = (mask.coord(v, a), mask.shape()[a], mask.strides()[a]);
                c >= 1 && c + 1 < n && [v - s, v + s].iter().all(|&w| mask.classify(w) == VertexClass::Interior)
            })
    };
    let values = random_vector(nv * dim, seed ^ 0x0b5e_55ed);
    let rows = (0..dim)
        .map(|i| {
            FormField::from_fn(mask, 0, BcMode::FullDirichlet, |_, v| if deep(v) { values[i * nv + v] } else { 0.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    let t = grad_rows(&rows)?;
    let t_norm = t.norm_sq();
    if t_norm == 0.0 {
        return Ok(f64::NAN);
    }
    let space = mask.space(1, mode)?;
    for r in t.rows() {
        let mut copy = r.data().to_vec();
        space.project(&mut copy);
        if copy != r.data() {
            return Err(Error::InvariantViolation("gradient test field leaves the tensor space".into()));
        }
    }
    Ok((t.sym_part().norm_sq() + curl_rows(&t)?.norm_sq()) / t_norm)
}

/// All constants of the main estimate for one mask and boundary mode.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantsRecord {
    pub domain: String,
    pub dim: usize,
    pub resolution: Vec<usize>,
    pub h: f64,
    pub bc_mode: String,
    /// `c_{p,0}`.
    pub c_p: f64,
    /// `c_{p,1}` on the tangential complex.
    pub c_m: f64,
    /// `max{2, sqrt(5) c_m}`.
    pub c_hat: f64,
    pub c_sharp: Option<f64>,
    /// Harmonic Dirichlet `q`-form counts (tangential complex).
    pub harmonic_dims: BTreeMap<usize, usize>,
    pub gap_p: f64,
    pub gap_m: f64,
    pub gap_sharp: Option<f64>,
    pub converged: bool,
    pub eig_tol: f64,
    pub seed: u64,
}

impl ConstantsRecord {
    pub fn harmonic_one_forms(&self) -> usize {
        self.harmonic_dims.get(&1).copied().unwrap_or(0)
    }
}

pub fn c_hat(c_m: f64) -> f64 {
    (5f64.sqrt() * c_m).max(2.0)
}

#[derive(Clone, Debug)]
pub struct ConstantsDetail {
    pub record: ConstantsRecord,
    pub poincare: Spectrum,
    pub maxwell: Spectrum,
    pub sharp: Option<SharpResult>,
}

/// `c_p`, `c_m`, `c_hat` and, when requested, `c_sharp` for `mode`.
pub fn compute_constants(
    mask: &Arc<DomainMask>,
    mode: BcMode,
    opts: &EigenOptions,
    with_sharp: bool,
) -> Result<ConstantsDetail> {
    let (c_p, poincare) = poincare_q_constant(mask, 0, mode, opts)?;
    let (c_m, maxwell) = poincare_q_constant(mask, 1, BcMode::Tangential, opts)?;
    let sharp = if with_sharp { Some(sharp_constant(mask, mode, opts)?) } else { None };
    let mut harmonic_dims = BTreeMap::new();
    harmonic_dims.insert(1, maxwell.kernel_dimension);
    let converged = poincare.converged && maxwell.converged && sharp.as_ref().is_none_or(|s| s.spectrum.converged);
    let record = ConstantsRecord {
        domain: mask.describe(),
        dim: mask.dim(),
        resolution: mask.shape().to_vec(),
        h: mask.h(),
        bc_mode: mode.name().to_string(),
        c_p,
        c_m,
        c_hat: c_hat(c_m),
        c_sharp: sharp.as_ref().map(|s| s.c_sharp),
        harmonic_dims,
        gap_p: poincare.gap_ratio,
        gap_m: maxwell.gap_ratio,
        gap_sharp: sharp.as_ref().map(|s| s.spectrum.gap_ratio),
        converged,
        eig_tol: opts.tol,
        seed: opts.seed,
    };
    Ok(ConstantsDetail { record, poincare, maxwell, sharp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{unit_domain, DomainKind};
    use crate::solvers::dense_eigen_oracle;
    use std::f64::consts::PI;

    fn grid(kind: DomainKind, dim: usize, n: usize) -> Arc<DomainMask> {
        Arc::new(unit_domain(kind, dim, n).unwrap())
    }

    #[test]
    fn poincare_on_square_matches_closed_form() {
        // discrete Dirichlet eigenvalue 2 * (4/h^2) sin^2(pi h / 2)
        let n = 17;
        let m = grid(DomainKind::Box, 2, n);
        let h = m.h();
        let (c, spec) = poincare_q_constant(&m, 0, BcMode::FullDirichlet, &EigenOptions::default()).unwrap();
        let lambda = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((spec.first_nonzero - lambda).abs() < 1e-9 * lambda);
        assert!((c - lambda.powf(-0.5)).abs() < 1e-9);
        assert_eq!(spec.kernel_dimension, 0);
    }

    #[test]
    fn maxwell_on_square_agrees_with_dense() {
        let m = grid(DomainKind::Box, 2, 9);
        let op = HodgeOperator::new(&m, 1, BcMode::Tangential).unwrap();
        let dense = dense_eigen_oracle(&op, &[], 4000).unwrap();
        let (c, spec) = poincare_q_constant(&m, 1, BcMode::Tangential, &EigenOptions::default()).unwrap();
        let first = dense.eigenvalues.iter().copied().find(|&l| l > 1e-8 * dense.eigenvalues.last().unwrap()).unwrap();
        assert!((spec.first_nonzero - first).abs() <= 1e-8 * first);
        assert!((c - first.powf(-0.5)).abs() <= 1e-8 * c);
    }

    #[test]
    fn annulus_carries_one_harmonic_field() {
        let m = grid(DomainKind::Annulus, 2, 17);
        let (dim, spec) = harmonic_dimension(&m, 1, BcMode::Tangential, &EigenOptions::default()).unwrap();
        assert_eq!(dim, 1);
        assert!(spec.reliable, "gap {}", spec.gap_ratio);
        let op = HodgeOperator::new(&m, 1, BcMode::Tangential).unwrap();
        let dense = dense_eigen_oracle(&op, &[], 4000).unwrap();
        let top = *dense.eigenvalues.last().unwrap();
        assert_eq!(dense.eigenvalues.iter().filter(|&&l| l < 1e-8 * top).count(), 1);
    }

    #[test]
    fn box_has_no_harmonic_one_forms_but_one_top_form() {
        let m = grid(DomainKind::Box, 2, 9);
        let opts = EigenOptions::default();
        assert_eq!(harmonic_dimension(&m, 1, BcMode::Tangential, &opts).unwrap().0, 0);
        assert_eq!(harmonic_dimension(&m, 0, BcMode::Tangential, &opts).unwrap().0, 0);
        assert_eq!(harmonic_dimension(&m, 2, BcMode::Tangential, &opts).unwrap().0, 1);
        assert_eq!(harmonic_dimension(&m, 2, BcMode::FullDirichlet, &opts).unwrap().0, 0);
    }

    #[test]
    fn sharp_constant_below_c_hat_and_dense_agreement() {
        let m = grid(DomainKind::Box, 2, 9);
        let opts = EigenOptions::default();
        let detail = compute_constants(&m, BcMode::FullDirichlet, &opts, true).unwrap();
        let sharp = detail.sharp.unwrap();
        assert!(sharp.c_sharp <= detail.record.c_hat + 1e-8);
        assert!(sharp.c_sharp >= 1.0);
        assert!(sharp.gradient_quotient <= 1.0 + 1e-12);
        assert!(sharp.lambda_min <= sharp.gradient_quotient + 1e-12);
        let op = SharpOperator::new(&m, BcMode::FullDirichlet).unwrap();
        let dense = dense_eigen_oracle(&op, &[], 4000).unwrap();
        assert!((dense.eigenvalues[0] - sharp.lambda_min).abs() <= 1e-8 * sharp.lambda_min);
    }
}
