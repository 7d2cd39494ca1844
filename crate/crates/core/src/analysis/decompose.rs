//! Hodge-Helmholtz splitting `E = dp + R` with a Dirichlet potential.

use super::operators::PotentialOperator;
use crate::domain::BcMode;
use crate::error::{Error, Result};
use crate::field::{FormField, TensorField};
use crate::ops::{exterior_derivative, grad_rows};
use crate::solvers::{cg_solve, LinearOperator, SolveReport};

#[derive(Clone, Debug)]
pub struct HodgeSplit {
    /// Dirichlet `(q-1)`-form `p`.
    pub potential: FormField,
    /// `dp`.
    pub exact: FormField,
    /// `R = E - dp`, weakly coclosed against Dirichlet test forms.
    pub remainder: FormField,
    /// `|<dp, R>| / |E|^2`.
    pub orthogonality_defect: f64,
    pub report: SolveReport,
}

fn max_iterations(n: usize) -> usize {
    2000 + 2 * n
}

/// Galerkin projection of a `q`-form onto `d` of Dirichlet `(q-1)`-forms:
/// `<dp, d phi> = <E, d phi>` for all Dirichlet `phi`, solved by CG from a
/// zero start (which stays in the range when `d` has a kernel).
pub fn hodge_decompose(e: &FormField, tol: f64) -> Result<HodgeSplit> {
    let q = e.degree();
    let mask = e.mask();
    if q == 0 || q > mask.dim() {
        return Err(Error::DegreeOutOfRange { dim: mask.dim(), degree: q });
    }
    let op = PotentialOperator::new(mask, q - 1)?;
    let b = op.rhs(e.data());
    let (x, report) = cg_solve(&op, &b, tol, max_iterations(op.dim()))?;
    if !report.converged {
        return Err(Error::DecompositionFailed(format!(
            "CG stopped after {} iterations at relative residual {:.3e} (tolerance {:.1e})",
            report.iterations, report.residual, tol
        )));
    }
    let potential = FormField::from_dofs(mask, q - 1, BcMode::FullDirichlet, &x)?;
    let exact = exterior_derivative(&potential)?;
    let remainder = e.sub(&exact)?;
    let scale = e.norm_sq();
    let orthogonality_defect = if scale > 0.0 { exact.inner_product(&remainder)?.abs() / scale } else { 0.0 };
    Ok(HodgeSplit { potential, exact, remainder, orthogonality_defect, report })
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    /// Dirichlet potential `v`, one 0-form per row.
    pub potential: Vec<FormField>,
    pub grad: TensorField,
    /// `S = T - Grad v`.
    pub solenoidal: TensorField,
    /// `|<Grad v, S>| / |T|^2`.
    pub orthogonality_defect: f64,
    /// `| |T|^2 - |Grad v|^2 - |S|^2 | / |T|^2`.
    pub pythagoras_defect: f64,
    pub reports: Vec<SolveReport>,
}

/// Row-wise splitting `T = Grad v + S` with `Div S = 0` weakly.
pub fn helmholtz_decompose_tensor(t: &TensorField, tol: f64) -> Result<DecompositionResult> {
    if t.bc() == BcMode::None {
        return Err(Error::Incompatible("tensor decomposition needs a boundary condition on T".into()));
    }
    let splits = t.rows().iter().map(|r| hodge_decompose(r, tol)).collect::<Result<Vec<_>>>()?;
    let potential: Vec<FormField> = splits.iter().map(|s| s.potential.clone()).collect();
    let grad = grad_rows(&potential)?;
    let solenoidal = t.sub(&grad)?;
    let total = t.norm_sq();
    let (orthogonality_defect, pythagoras_defect) = if total > 0.0 {
        (grad.inner_product(&solenoidal)?.abs() / total, (total - grad.norm_sq() - solenoidal.norm_sq()).abs() / total)
    } else {
        (0.0, 0.0)
    };
    Ok(DecompositionResult {
        potential,
        grad,
        solenoidal,
        orthogonality_defect,
        pythagoras_defect,
        reports: splits.into_iter().map(|s| s.report).collect(),
    })
}
