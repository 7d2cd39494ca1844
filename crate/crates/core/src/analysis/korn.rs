//! Korn's first inequality `|Grad v| <= sqrt(2) |sym Grad v|` and the
//! identity behind it.

use serde::Serialize;

use crate::domain::{BcMode, VertexClass};
use crate::error::{Error, Result};
use crate::field::FormField;
use crate::ops::{div, grad_rows, vector_as_one_form};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KornMode {
    /// `v` vanishes on the boundary.
    Dirichlet,
    /// Each `v_n` is constant on the (connected) boundary.
    TangentialVariant,
}

impl KornMode {
    pub fn name(self) -> &'static str {
        match self {
            KornMode::Dirichlet => "dirichlet",
            KornMode::TangentialVariant => "tangential_variant",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KornReport {
    pub mode: KornMode,
    pub grad_norm: f64,
    pub sym_grad_norm: f64,
    pub div_norm: f64,
    /// `|Grad v| / |sym Grad v|`, 0 for the zero field.
    pub ratio: f64,
    /// `|2 |sym Grad v|^2 - |Grad v|^2 - |div v|^2| / |Grad v|^2`.
    pub identity_residual: f64,
    /// Set when both norms vanish and the ratio is 0 by convention.
    pub zero_field: bool,
    /// Boundary constants removed in the tangential variant.
    pub boundary_constants: Vec<f64>,
}

/// Evaluates the Korn ratio and identity residual of a vector field given
/// as `N` 0-forms.
///
/// In the tangential variant the constants are subtracted first. The
/// shifted field is Dirichlet and has the same gradient on every edge of
/// the domain, so the Dirichlet bound applies to it unchanged.
pub fn korn_check(v: &[FormField], mode: KornMode) -> Result<KornReport> {
    let first = v.first().ok_or_else(|| Error::Incompatible("empty vector field".into()))?;
    let mask = first.mask().clone();
    let (field, boundary_constants) = match mode {
        KornMode::Dirichlet => {
            let rows = v.iter().map(|c| c.clone().with_bc(BcMode::FullDirichlet)).collect::<Vec<_>>();
            if rows.iter().zip(v).any(|(r, c)| r.data() != c.data()) {
                return Err(Error::Incompatible("Dirichlet Korn check needs vanishing boundary values".into()));
            }
            (rows, Vec::new())
        }
        KornMode::TangentialVariant => {
            if mask.boundary_components() != 1 {
                return Err(Error::DisconnectedBoundary(mask.boundary_components()));
            }
            let boundary: Vec<usize> =
                (0..mask.num_vertices()).filter(|&x| mask.classify(x) == VertexClass::Boundary).collect();
            let mut rows = Vec::with_capacity(v.len());
            let mut constants = Vec::with_capacity(v.len());
            for c in v {
                let value = boundary.first().map_or(0.0, |&b| c.get(0, b));
                if boundary.iter().any(|&b| c.get(0, b) != value) {
                    return Err(Error::Incompatible("tangential variant needs v_n constant on the boundary".into()));
                }
                let shifted = FormField::from_fn(&mask, 0, BcMode::FullDirichlet, |_, x| c.get(0, x) - value)?;
                rows.push(shifted);
                constants.push(value);
            }
            (rows, constants)
        }
    };
    let g = grad_rows(&field)?;
    let grad_sq = g.norm_sq();
    let sym_sq = g.sym_part().norm_sq();
    let div_sq = div(&vector_as_one_form(&field)?)?.norm_sq();
    let zero_field = grad_sq == 0.0 && sym_sq == 0.0;
    if !zero_field && sym_sq == 0.0 {
        return Err(Error::InvariantViolation("|sym Grad v| = 0 with |Grad v| > 0".into()));
    }
    let ratio = if zero_field { 0.0 } else { (grad_sq / sym_sq).sqrt() };
    let identity_residual = if grad_sq > 0.0 { (2.0 * sym_sq - grad_sq - div_sq).abs() / grad_sq } else { 0.0 };
    Ok(KornReport {
        mode,
        grad_norm: grad_sq.sqrt(),
        sym_grad_norm: sym_sq.sqrt(),
        div_norm: div_sq.sqrt(),
        ratio,
        identity_residual,
        zero_field,
        boundary_constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{unit_domain, DomainKind, DomainMask};
    use crate::field::random_field;
    use std::sync::Arc;

    fn grid(kind: DomainKind, dim: usize, n: usize) -> Arc<DomainMask> {
        Arc::new(unit_domain(kind, dim, n).unwrap())
    }

    fn random_vector_field(m: &Arc<DomainMask>, seed: u64) -> Vec<FormField> {
        (0..m.dim() as u64).map(|i| random_field(m, 0, BcMode::FullDirichlet, seed * 8 + i).unwrap()).collect()
    }

    #[test]
    fn zero_field_convention() {
        let m = grid(DomainKind::Box, 2, 5);
        let v = vec![FormField::zeros(&m, 0, BcMode::FullDirichlet).unwrap(); 2];
        let r = korn_check(&v, KornMode::Dirichlet).unwrap();
        assert!(r.zero_field);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn dirichlet_ratio_and_identity() {
        for (dim, n) in [(2, 17), (3, 9)] {
            let m = grid(DomainKind::Box, dim, n);
            for seed in 0..20 {
                let r = korn_check(&random_vector_field(&m, seed), KornMode::Dirichlet).unwrap();
                assert!(r.ratio <= 2f64.sqrt() + 1e-10);
                assert!(r.identity_residual <= 1e-13, "{}", r.identity_residual);
            }
        }
    }

    #[test]
    fn boundary_constants_do_not_change_the_ratio() {
        let m = grid(DomainKind::Ball, 2, 17);
        let v = random_vector_field(&m, 3);
        let base = korn_check(&v, KornMode::Dirichlet).unwrap();
        let shifted: Vec<FormField> = v
            .iter()
            .enumerate()
            .map(|(i, c)| {
                FormField::from_fn(&m, 0, BcMode::None, |_, x| {
                    let b = if m.classify(x) == VertexClass::Exterior { 0.0 } else { 1.5 - i as f64 };
                    c.get(0, x) + b
                })
                .unwrap()
            })
            .collect();
        let r = korn_check(&shifted, KornMode::TangentialVariant).unwrap();
        assert!((r.ratio - base.ratio).abs() <= 1e-12 * base.ratio);
        assert_eq!(r.boundary_constants, vec![1.5, 0.5]);
        assert!(matches!(korn_check(&shifted, KornMode::Dirichlet), Err(Error::Incompatible(_))));
    }

    #[test]
    fn tangential_variant_refuses_disconnected_boundary() {
        let m = grid(DomainKind::Annulus, 2, 17);
        let v = random_vector_field(&m, 0);
        assert!(matches!(korn_check(&v, KornMode::TangentialVariant), Err(Error::DisconnectedBoundary(2))));
    }
}
