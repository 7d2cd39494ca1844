//! The proof of `|T| <= c_hat (|sym T|^2 + |Curl T|^2)^(1/2)` run step by
//! step on a concrete tensor field:
//!
//! 1. `T = Grad v + S` with `Curl S = Curl T`,
//! 2. `|S| <= c_m (|Curl S|^2 + |Div S|^2)^(1/2)` with `Div S = 0` weakly,
//! 3. `|Grad v|^2 <= 2 |sym Grad v|^2`,
//! 4. `|T|^2 <= 4 |sym T|^2 + 5 |S|^2`,
//! 5. `|T| <= c_hat (|sym T|^2 + |Curl T|^2)^(1/2)`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::constants::ConstantsRecord;
use super::decompose::helmholtz_decompose_tensor;
use crate::domain::{BcMode, DomainMask};
use crate::error::{Error, Result};
use crate::field::{random_field, TensorField};
use crate::ops::{curl_rows, grad_rows, weak_div_rows};
use crate::snapshot::Snapshot;

/// Random test tensors for the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// i.i.d. entries on the free DOFs.
    General,
    /// `Grad v` for a random Dirichlet `v`; the rows lie in the
    /// tangential space.
    Compatible,
    /// Pointwise skew-symmetric, so `sym T = 0`.
    Skew,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::General => "general",
            Family::Compatible => "compatible",
            Family::Skew => "skew",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "general" => Some(Family::General),
            "compatible" => Some(Family::Compatible),
            "skew" => Some(Family::Skew),
            _ => None,
        }
    }
}

pub fn sample_tensor(mask: &Arc<DomainMask>, mode: BcMode, family: Family, seed: u64) -> Result<TensorField> {
    match family {
        Family::General => TensorField::random(mask, mode, seed),
        Family::Skew => TensorField::random_skew(mask, mode, seed),
        Family::Compatible => {
            let n = mask.dim() as u64;
            let v = (0..n)
                .map(|i| random_field(mask, 0, BcMode::FullDirichlet, seed.wrapping_mul(n).wrapping_add(i)))
                .collect::<Result<Vec<_>>>()?;
            grad_rows(&v)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub id: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// Absolute allowance added to `rhs`.
    pub slack: f64,
    pub ratio: f64,
    pub passed: bool,
}

impl Assertion {
    fn new(id: &'static str, lhs: f64, rhs: f64, slack: f64) -> Self {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self { id, lhs, rhs, slack, ratio, passed: lhs <= rhs + slack }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub t_norm: f64,
    pub sym_norm: f64,
    pub curl_norm: f64,
    /// `(|sym T|^2 + |Curl T|^2)^(1/2)`.
    pub triple_norm: f64,
    pub s_norm: f64,
    pub grad_v_norm: f64,
    pub weak_div_s_norm: f64,
    pub pythagoras_defect: f64,
    pub orthogonality_defect: f64,
    pub assertions: Vec<Assertion>,
    /// `|T| / (c_hat |||T|||)`, at most 1 when the estimate holds.
    pub final_ratio: f64,
    /// `|||T||| <= (1 + C_curl^2)^(1/2) |T|` with `C_curl = 2 sqrt(2N) / h`.
    pub upper_bound_ok: bool,
    pub zero_field: bool,
    pub passed: bool,
}

impl ChainReport {
    pub fn failed_ids(&self) -> Vec<&'static str> {
        self.assertions.iter().filter(|a| !a.passed).map(|a| a.id).collect()
    }
}

fn same_grid(constants: &ConstantsRecord, mask: &DomainMask) -> bool {
    constants.dim == mask.dim() && constants.resolution == mask.shape() && constants.h == mask.h()
}

/// Runs the five steps on `t`. `tol` is the relative allowance of every
/// inequality; the Poisson solves behind the splitting use a tighter
/// tolerance.
pub fn main_lemma_chain(t: &TensorField, constants: &ConstantsRecord, tol: f64) -> Result<ChainReport> {
    main_lemma_chain_with(t, constants, tol, (tol * 1e-4).max(1e-14))
}

/// As [`main_lemma_chain`] with an explicit CG tolerance for the splitting.
pub fn main_lemma_chain_with(
    t: &TensorField,
    constants: &ConstantsRecord,
    tol: f64,
    cg_tol: f64,
) -> Result<ChainReport> {
    let mask = t.mask().clone();
    if t.bc() == BcMode::None {
        return Err(Error::Incompatible("the estimate needs T with vanishing tangential trace".into()));
    }
    if !same_grid(constants, &mask) {
        return Err(Error::Incompatible("constants were computed on a different grid".into()));
    }
    if constants.harmonic_one_forms() > 0 {
        return Err(Error::HarmonicFormsPresent(constants.harmonic_one_forms()));
    }
    let h = mask.h();
    let dec = helmholtz_decompose_tensor(t, cg_tol)?;
    let s = &dec.solenoidal;
    let curl_t = curl_rows(t)?;
    let curl_s = curl_rows(s)?;
    let t_sq = t.norm_sq();
    let t_norm = t_sq.sqrt();
    let sym_sq = t.sym_part().norm_sq();
    let curl_sq = curl_t.norm_sq();
    let triple = (sym_sq + curl_sq).sqrt();
    let s_sq = s.norm_sq();
    let wdiv_sq: f64 = weak_div_rows(s)?.iter().map(|r| r.norm_sq()).sum();
    let grad_sq = dec.grad.norm_sq();
    let sym_grad_sq = dec.grad.sym_part().norm_sq();

    let curl_defect = curl_s.sub(&curl_t)?.norm();
    let curl_scale = curl_sq.sqrt() + t_norm / h;
    let mut first = Assertion::new("i", curl_defect, 0.0, tol * curl_scale);
    first.ratio = if curl_scale > 0.0 { curl_defect / curl_scale } else { 0.0 };
    let assertions = vec![
        first,
        Assertion::new("ii", s_sq.sqrt(), constants.c_m * (curl_s.norm_sq() + wdiv_sq).sqrt(), tol * t_norm),
        Assertion::new("iii", grad_sq, 2.0 * sym_grad_sq, tol * t_sq),
        Assertion::new("iv", t_sq, 4.0 * sym_sq + 5.0 * s_sq, tol * t_sq),
        Assertion::new("v", t_norm, constants.c_hat * triple, tol * t_norm),
    ];
    let c_curl = 2.0 * (2.0 * mask.dim() as f64).sqrt() / h;
    let upper_bound_ok = triple <= (1.0 + c_curl * c_curl).sqrt() * t_norm * (1.0 + tol);
    let zero_field = t_sq == 0.0;
    let final_ratio = assertions[4].ratio;
    let passed = assertions.iter().all(|a| a.passed);
    Ok(ChainReport {
        t_norm,
        sym_norm: sym_sq.sqrt(),
        curl_norm: curl_sq.sqrt(),
        triple_norm: triple,
        s_norm: s_sq.sqrt(),
        grad_v_norm: grad_sq.sqrt(),
        weak_div_s_norm: wdiv_sq.sqrt(),
        pythagoras_defect: dec.pythagoras_defect,
        orthogonality_defect: dec.orthogonality_defect,
        assertions,
        final_ratio,
        upper_bound_ok,
        zero_field,
        passed,
    })
}

/// Writes `t` with the failing assertions, every ratio and the constants
/// in the snapshot header. Returns the file path.
pub fn dump_counterexample(
    t: &TensorField,
    report: &ChainReport,
    constants: &ConstantsRecord,
    dir: &Path,
    tag: &str,
) -> Result<PathBuf> {
    let mut snap = Snapshot::from_tensor(t).with_meta("assertion", report.failed_ids().join(","));
    for a in &report.assertions {
        snap = snap.with_meta(&format!("ratio_{}", a.id), a.ratio);
    }
    snap = snap.with_meta("c_p", constants.c_p).with_meta("c_m", constants.c_m).with_meta("c_hat", constants.c_hat);
    let path = dir.join(format!("{tag}.snap"));
    snap.write_to(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::constants::compute_constants;
    use crate::domain::{unit_domain, DomainKind};
    use crate::solvers::EigenOptions;

    fn setup(kind: DomainKind, dim: usize, n: usize) -> (Arc<DomainMask>, ConstantsRecord) {
        let m = Arc::new(unit_domain(kind, dim, n).unwrap());
        let c = compute_constants(&m, BcMode::FullDirichlet, &EigenOptions::default(), false).unwrap().record;
        (m, c)
    }

    #[test]
    fn all_families_pass_on_square() {
        let (m, c) = setup(DomainKind::Box, 2, 17);
        for family in [Family::General, Family::Compatible, Family::Skew] {
            for seed in 0..5 {
                let t = sample_tensor(&m, BcMode::FullDirichlet, family, seed).unwrap();
                let r = main_lemma_chain(&t, &c, 1e-8).unwrap();
                assert!(r.passed, "{family:?} seed {seed}: {:?}", r.failed_ids());
                assert!(r.final_ratio <= 1.0);
                assert!(r.upper_bound_ok);
                assert!(r.pythagoras_defect <= 1e-9);
            }
        }
    }

    #[test]
    fn compatible_field_reduces_to_korn() {
        let (m, c) = setup(DomainKind::Box, 2, 17);
        let t = sample_tensor(&m, BcMode::FullDirichlet, Family::Compatible, 1).unwrap();
        let r = main_lemma_chain(&t, &c, 1e-8).unwrap();
        assert!(r.s_norm <= 1e-9 * r.t_norm);
        assert!(r.t_norm <= 2f64.sqrt() * r.sym_norm * (1.0 + 1e-10));
    }

    #[test]
    fn skew_field_is_controlled_by_its_curl() {
        let (m, c) = setup(DomainKind::Ball, 3, 9);
        let t = sample_tensor(&m, BcMode::FullDirichlet, Family::Skew, 4).unwrap();
        let r = main_lemma_chain(&t, &c, 1e-8).unwrap();
        assert!(r.sym_norm <= 1e-15 * r.t_norm);
        assert!(r.t_norm <= c.c_hat * r.curl_norm);
    }

    #[test]
    fn harmonic_fields_are_refused() {
        let (m, c) = setup(DomainKind::Annulus, 2, 17);
        assert_eq!(c.harmonic_one_forms(), 1);
        let t = sample_tensor(&m, BcMode::FullDirichlet, Family::General, 0).unwrap();
        assert!(matches!(main_lemma_chain(&t, &c, 1e-8), Err(Error::HarmonicFormsPresent(1))));
    }

    #[test]
    fn forged_constant_produces_a_replayable_counterexample() {
        let (m, mut c) = setup(DomainKind::Box, 2, 9);
        c.c_m *= 0.1;
        c.c_hat = 1e-6;
        let t = sample_tensor(&m, BcMode::FullDirichlet, Family::General, 2).unwrap();
        let r = main_lemma_chain(&t, &c, 1e-8).unwrap();
        assert!(!r.passed);
        assert!(r.failed_ids().contains(&"v"));
        let dir = tempfile::tempdir().unwrap();
        let path = dump_counterexample(&t, &r, &c, dir.path(), "case").unwrap();
        let snap = Snapshot::read_from(&path).unwrap();
        assert!(snap.meta("assertion").unwrap().contains('v'));
        let mask = snap.domain_mask().unwrap();
        let t2 = snap.to_tensor(&mask).unwrap();
        assert_eq!(t2.row(0).data(), t.row(0).data());
    }
}
