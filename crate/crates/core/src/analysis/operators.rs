//! Matrix-free quadratic forms on free-DOF coordinates.
//!
//! All forms share the mass matrix `h^N I`, which cancels in every
//! Rayleigh quotient, so the operators below are plain symmetric matrices
//! acting on gathered coordinates.

use std::sync::Arc;

use crate::domain::{BcMode, DofSpace, DomainMask};
use crate::error::{Error, Result};
use crate::ops::{d_raw, dt_raw};
use crate::solvers::LinearOperator;

fn check_mode(mode: BcMode) -> Result<()> {
    if mode == BcMode::None {
        return Err(Error::Incompatible("quadratic forms need a boundary condition (full or tangential)".into()));
    }
    Ok(())
}

/// `|dE|^2 + |delta E|^2` on `q`-forms of a boundary mode.
///
/// In tangential mode `delta` is tested against tangential `(q-1)`-forms
/// only (the adjoint of `d` inside the relative complex), which makes the
/// kernel the space of harmonic Dirichlet forms. In full Dirichlet mode
/// `delta` is the lattice coderivative.
pub struct HodgeOperator {
    mask: Arc<DomainMask>,
    q: usize,
    mode: BcMode,
    space: Arc<DofSpace>,
    lower: Option<Arc<DofSpace>>,
}

impl HodgeOperator {
    pub fn new(mask: &Arc<DomainMask>, q: usize, mode: BcMode) -> Result<Self> {
        check_mode(mode)?;
        let space = mask.space(q, mode)?;
        let lower = if q >= 1 && mode == BcMode::Tangential { Some(mask.space(q - 1, mode)?) } else { None };
        Ok(Self { mask: mask.clone(), q, mode, space, lower })
    }

    pub fn mask(&self) -> &Arc<DomainMask> {
        &self.mask
    }

    pub fn degree(&self) -> usize {
        self.q
    }

    pub fn mode(&self) -> BcMode {
        self.mode
    }

    pub fn space(&self) -> &Arc<DofSpace> {
        &self.space
    }
}

impl LinearOperator for HodgeOperator {
    fn dim(&self) -> usize {
        self.space.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mask = &*self.mask;
        let mut e = vec![0.0; self.space.mask.len()];
        self.space.scatter_into(x, &mut e);
        let mut acc = vec![0.0; e.len()];
        if self.q < mask.dim() {
            let de = d_raw(mask, self.q, &e);
            acc = dt_raw(mask, self.q, &de);
        }
        if self.q >= 1 {
            let mut co = dt_raw(mask, self.q - 1, &e);
            if let Some(lower) = &self.lower {
                lower.project(&mut co);
            }
            let back = d_raw(mask, self.q - 1, &co);
            acc.iter_mut().zip(&back).for_each(|(a, b)| *a += b);
        }
        for (yi, &i) in y.iter_mut().zip(&self.space.free) {
            *yi = acc[i];
        }
    }
}

/// `d^t d` on Dirichlet `q`-forms: the Galerkin matrix of the potential
/// problem `<dp, d phi> = <E, d phi>`.
pub struct PotentialOperator {
    mask: Arc<DomainMask>,
    q: usize,
    space: Arc<DofSpace>,
}

impl PotentialOperator {
    pub fn new(mask: &Arc<DomainMask>, q: usize) -> Result<Self> {
        if q >= mask.dim() {
            return Err(Error::DegreeOverflow(q));
        }
        Ok(Self { mask: mask.clone(), q, space: mask.space(q, BcMode::FullDirichlet)? })
    }

    pub fn space(&self) -> &Arc<DofSpace> {
        &self.space
    }

    /// Right-hand side `P d^t E` for a `(q+1)`-form stored in `e`.
    pub fn rhs(&self, e: &[f64]) -> Vec<f64> {
        self.space.gather(&dt_raw(&self.mask, self.q, e))
    }
}

impl LinearOperator for PotentialOperator {
    fn dim(&self) -> usize {
        self.space.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut p = vec![0.0; self.space.mask.len()];
        self.space.scatter_into(x, &mut p);
        let out = dt_raw(&self.mask, self.q, &d_raw(&self.mask, self.q, &p));
        for (yi, &i) in y.iter_mut().zip(&self.space.free) {
            *yi = out[i];
        }
    }
}

/// `|sym T|^2 + |Curl T|^2` on tensor fields whose rows lie in the
/// 1-form space of a boundary mode. Coordinates are the row DOF vectors
/// concatenated.
pub struct SharpOperator {
    mask: Arc<DomainMask>,
    mode: BcMode,
    space: Arc<DofSpace>,
}

impl SharpOperator {
    pub fn new(mask: &Arc<DomainMask>, mode: BcMode) -> Result<Self> {
        check_mode(mode)?;
        if mask.dim() < 2 {
            return Err(Error::Incompatible("tensor estimates need N >= 2".into()));
        }
        Ok(Self { mask: mask.clone(), mode, space: mask.space(1, mode)? })
    }

    pub fn mode(&self) -> BcMode {
        self.mode
    }

    pub fn row_space(&self) -> &Arc<DofSpace> {
        &self.space
    }
}

impl LinearOperator for SharpOperator {
    fn dim(&self) -> usize {
        self.mask.dim() * self.space.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let dim = self.mask.dim();
        let nv = self.mask.num_vertices();
        let m = self.space.len();
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|i| {
                let mut r = vec![0.0; dim * nv];
                self.space.scatter_into(&x[i * m..(i + 1) * m], &mut r);
                r
            })
            .collect();
        for i in 0..dim {
            let mut acc = dt_raw(&self.mask, 1, &d_raw(&self.mask, 1, &rows[i]));
            for k in 0..dim {
                let (a, b) = (&rows[i][k * nv..(k + 1) * nv], &rows[k][i * nv..(i + 1) * nv]);
                for (v, out) in acc[k * nv..(k + 1) * nv].iter_mut().enumerate() {
                    *out += 0.5 * (a[v] + b[v]);
                }
            }
            for (yi, &j) in y[i * m..(i + 1) * m].iter_mut().zip(&self.space.free) {
                *yi = acc[j];
            }
        }
    }
}
