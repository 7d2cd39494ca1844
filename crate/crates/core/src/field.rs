//! Collocated q-form, tensor and curl fields on a [`DomainMask`].
//!
//! Every field stores all `C(N, q)` component grids over the full bounding
//! box (component-major, row-major vertices). Entries outside the free
//! space of the field's boundary mode are exactly zero.

use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{BcMode, DofSpace, DomainMask};
use crate::error::{Error, Result};
use crate::summation;

#[derive(Clone, Debug)]
pub struct FormField {
    mask: Arc<DomainMask>,
    q: usize,
    bc: BcMode,
    data: Vec<f64>,
}

impl FormField {
    pub fn zeros(mask: &Arc<DomainMask>, q: usize, bc: BcMode) -> Result<Self> {
        if q > mask.dim() {
            return Err(Error::DegreeOutOfRange { dim: mask.dim(), degree: q });
        }
        let len = mask.algebra().components(q) * mask.num_vertices();
        Ok(Self { mask: mask.clone(), q, bc, data: vec![0.0; len] })
    }

    /// Wraps raw storage; constrained entries are zeroed.
    pub fn from_data(mask: &Arc<DomainMask>, q: usize, bc: BcMode, mut data: Vec<f64>) -> Result<Self> {
        let expected = mask.algebra().components(q.min(mask.dim())) * mask.num_vertices();
        if q > mask.dim() || data.len() != expected {
            return Err(Error::Incompatible(format!(
                "storage of length {} for a {q}-form needs {expected}",
                data.len()
            )));
        }
        mask.space(q, bc)?.project(&mut data);
        Ok(Self { mask: mask.clone(), q, bc, data })
    }

    /// Builds a field from free-DOF coordinates of `mask.space(q, bc)`.
    pub fn from_dofs(mask: &Arc<DomainMask>, q: usize, bc: BcMode, dofs: &[f64]) -> Result<Self> {
        let space = mask.space(q, bc)?;
        if dofs.len() != space.len() {
            return Err(Error::Incompatible(format!("{} dofs, space has {}", dofs.len(), space.len())));
        }
        let mut f = Self::zeros(mask, q, bc)?;
        space.scatter_into(dofs, &mut f.data);
        Ok(f)
    }

    /// Evaluates `f(component, vertex)` on the free entries.
    pub fn from_fn(mask: &Arc<DomainMask>, q: usize, bc: BcMode, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut out = Self::zeros(mask, q, bc)?;
        let nv = mask.num_vertices();
        for &i in &mask.space(q, bc)?.free {
            out.data[i] = f(i / nv, i % nv);
        }
        Ok(out)
    }

    pub(crate) fn raw(mask: Arc<DomainMask>, q: usize, bc: BcMode, data: Vec<f64>) -> Self {
        Self { mask, q, bc, data }
    }

    pub fn mask(&self) -> &Arc<DomainMask> {
        &self.mask
    }

    pub fn degree(&self) -> usize {
        self.q
    }

    pub fn bc(&self) -> BcMode {
        self.bc
    }

    pub fn components(&self) -> usize {
        self.mask.algebra().components(self.q)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let nv = self.mask.num_vertices();
        &self.data[c * nv..(c + 1) * nv]
    }

    pub fn get(&self, c: usize, v: usize) -> f64 {
        self.data[c * self.mask.num_vertices() + v]
    }

    pub fn space(&self) -> Arc<DofSpace> {
        self.mask.space(self.q, self.bc).expect("degree checked at construction")
    }

    pub fn dofs(&self) -> Vec<f64> {
        self.space().gather(&self.data)
    }

    /// Largest magnitude on entries the boundary mode forbids; zero for a
    /// well-formed field.
    pub fn constraint_violation(&self) -> f64 {
        let space = self.space();
        self.data.iter().zip(&space.mask).filter(|(_, &keep)| !keep).fold(0.0, |m, (v, _)| m.max(v.abs()))
    }

    /// Relabels the field, zeroing entries the new mode forbids.
    pub fn with_bc(mut self, bc: BcMode) -> Self {
        self.bc = bc;
        self.space().project(&mut self.data);
        self
    }

    fn check_compatible(&self, other: &FormField) -> Result<()> {
        if !Arc::ptr_eq(&self.mask, &other.mask) {
            return Err(Error::Incompatible("fields live on different masks".into()));
        }
        if self.q != other.q {
            return Err(Error::Incompatible(format!("degrees {} and {}", self.q, other.q)));
        }
        Ok(())
    }

    /// `h^N * sum_x sum_I E_I(x) H_I(x)`
    pub fn inner_product(&self, other: &FormField) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.volume() * summation::dot(&self.data, &other.data))
    }

    pub fn norm_sq(&self) -> f64 {
        self.volume() * summation::dot(&self.data, &self.data)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    fn volume(&self) -> f64 {
        self.mask.h().powi(self.mask.dim() as i32)
    }

    /// `self - other`; the result keeps `self`'s boundary label only when
    /// both operands share it.
    pub fn sub(&self, other: &FormField) -> Result<FormField> {
        self.combine(other, -1.0)
    }

    pub fn add(&self, other: &FormField) -> Result<FormField> {
        self.combine(other, 1.0)
    }

    fn combine(&self, other: &FormField, alpha: f64) -> Result<FormField> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + alpha * b).collect();
        let bc = if self.bc == other.bc { self.bc } else { weaker(self.bc, other.bc) };
        Ok(Self::raw(self.mask.clone(), self.q, bc, data))
    }

    pub fn scaled(&self, alpha: f64) -> FormField {
        let data = self.data.iter().map(|v| alpha * v).collect();
        Self::raw(self.mask.clone(), self.q, self.bc, data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn rank(bc: BcMode) -> u8 {
    match bc {
        BcMode::FullDirichlet => 0,
        BcMode::Tangential => 1,
        BcMode::None => 2,
    }
}

/// The larger of two nested spaces.
pub(crate) fn weaker(a: BcMode, b: BcMode) -> BcMode {
    if rank(a) >= rank(b) {
        a
    } else {
        b
    }
}

/// I.i.d. uniform values in `[-1, 1]` on the free entries, exact zeros
/// elsewhere. Bit-identical for a fixed seed.
pub fn random_field(mask: &Arc<DomainMask>, q: usize, bc: BcMode, seed: u64) -> Result<FormField> {
    let space = mask.space(q, bc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dofs: Vec<f64> = (0..space.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    FormField::from_dofs(mask, q, bc, &dofs)
}

/// Seeded uniform vector of length `n`, shared by solvers for start
/// vectors.
pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// An `N x N` matrix field whose row `n` is the 1-form `T_n`.
#[derive(Clone, Debug)]
pub struct TensorField {
    rows: Vec<FormField>,
}

impl TensorField {
    pub fn from_rows(rows: Vec<FormField>) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Incompatible("tensor without rows".into()))?;
        let dim = first.mask.dim();
        if rows.len() != dim {
            return Err(Error::Incompatible(format!("{} rows for dimension {dim}", rows.len())));
        }
        for r in &rows {
            if !Arc::ptr_eq(&r.mask, &first.mask) || r.q != 1 || r.bc != first.bc {
                return Err(Error::Incompatible("tensor rows must be 1-forms sharing mask and mode".into()));
            }
        }
        Ok(Self { rows })
    }

    pub fn zeros(mask: &Arc<DomainMask>, bc: BcMode) -> Result<Self> {
        Self::from_rows((0..mask.dim()).map(|_| FormField::zeros(mask, 1, bc)).collect::<Result<_>>()?)
    }

    /// Random rows, seeds `seed * N + n`.
    pub fn random(mask: &Arc<DomainMask>, bc: BcMode, seed: u64) -> Result<Self> {
        let n = mask.dim() as u64;
        Self::from_rows(
            (0..n).map(|r| random_field(mask, 1, bc, seed.wrapping_mul(n).wrapping_add(r))).collect::<Result<_>>()?,
        )
    }

    /// Pointwise skew-symmetric random tensor supported where both
    /// `T_ik(x)` and `T_ki(x)` are free.
    pub fn random_skew(mask: &Arc<DomainMask>, bc: BcMode, seed: u64) -> Result<Self> {
        let dim = mask.dim();
        let nv = mask.num_vertices();
        let space = mask.space(1, bc)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Self::zeros(mask, bc)?;
        for v in 0..nv {
            for i in 0..dim {
                for k in (i + 1)..dim {
                    if space.mask[k * nv + v] && space.mask[i * nv + v] {
                        let a: f64 = rng.random_range(-1.0..=1.0);
                        t.rows[i].data[k * nv + v] = a;
                        t.rows[k].data[i * nv + v] = -a;
                    }
                }
            }
        }
        Ok(t)
    }

    pub fn mask(&self) -> &Arc<DomainMask> {
        &self.rows[0].mask
    }

    pub fn bc(&self) -> BcMode {
        self.rows[0].bc
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[FormField] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &FormField {
        &self.rows[i]
    }

    pub fn into_rows(self) -> Vec<FormField> {
        self.rows
    }

    /// Entry `T_ik` at vertex `v` (0-based `i`, `k`).
    pub fn get(&self, i: usize, k: usize, v: usize) -> f64 {
        self.rows[i].get(k, v)
    }

    pub fn inner_product(&self, other: &TensorField) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Incompatible("tensor dimensions differ".into()));
        }
        self.rows.iter().zip(&other.rows).map(|(a, b)| a.inner_product(b)).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.rows.iter().map(FormField::norm_sq).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn sub(&self, other: &TensorField) -> Result<TensorField> {
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a.sub(b)).collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    pub fn add(&self, other: &TensorField) -> Result<TensorField> {
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a.add(b)).collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    fn pointwise(&self, sign: f64) -> TensorField {
        let dim = self.dim();
        let nv = self.mask().num_vertices();
        let mut rows: Vec<Vec<f64>> = vec![vec![0.0; dim * nv]; dim];
        for (i, row) in rows.iter_mut().enumerate() {
            for k in 0..dim {
                let tik = self.rows[i].component(k);
                let tki = self.rows[k].component(i);
                for (v, out) in row[k * nv..(k + 1) * nv].iter_mut().enumerate() {
                    *out = 0.5 * (tik[v] + sign * tki[v]);
                }
            }
        }
        let mask = self.mask().clone();
        TensorField { rows: rows.into_iter().map(|d| FormField::raw(mask.clone(), 1, BcMode::None, d)).collect() }
    }

    /// `(T + T^t) / 2`, pointwise. The result carries no boundary label:
    /// transposition moves values between cells of different direction.
    pub fn sym_part(&self) -> TensorField {
        self.pointwise(1.0)
    }

    /// `(T - T^t) / 2`, pointwise.
    pub fn skew_part(&self) -> TensorField {
        self.pointwise(-1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.max_abs()))
    }
}

/// Row-wise curl of a tensor: `N` rows of 2-forms, entry `(i, (j,k))`
/// stored once for `j < k`.
#[derive(Clone, Debug)]
pub struct CurlField {
    rows: Vec<FormField>,
}

impl CurlField {
    pub(crate) fn from_rows(rows: Vec<FormField>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[FormField] {
        &self.rows
    }

    /// `(Curl T)_{ijk}` with 0-based indices; antisymmetric in `(j, k)`.
    pub fn get(&self, i: usize, j: usize, k: usize, v: usize) -> f64 {
        if j == k {
            return 0.0;
        }
        let (a, b, sign) = if j < k { (j, k, 1.0) } else { (k, j, -1.0) };
        let idx = crate::exterior::MultiIndex::new(self.rows[i].mask().dim(), vec![a + 1, b + 1]).expect("valid pair");
        sign * self.rows[i].get(idx.rank(), v)
    }

    pub fn norm_sq(&self) -> f64 {
        self.rows.iter().map(FormField::norm_sq).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn sub(&self, other: &CurlField) -> Result<CurlField> {
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a.sub(b)).collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{unit_domain, DomainKind, VertexClass};

    fn square(n: usize) -> Arc<DomainMask> {
        Arc::new(unit_domain(DomainKind::Box, 2, n).unwrap())
    }

    #[test]
    fn unit_spike_has_volume_norm() {
        let m = square(17);
        let v = 8 * m.strides()[0] + 8;
        let e = FormField::from_fn(&m, 0, BcMode::FullDirichlet, |_, x| if x == v { 1.0 } else { 0.0 }).unwrap();
        let h = m.h();
        assert_eq!(e.inner_product(&e).unwrap(), h * h);
    }

    #[test]
    fn disjoint_components_are_orthogonal() {
        let m = square(9);
        let a = FormField::from_fn(&m, 1, BcMode::None, |c, _| if c == 0 { 1.0 } else { 0.0 }).unwrap();
        let b = FormField::from_fn(&m, 1, BcMode::None, |c, _| if c == 1 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(a.inner_product(&b).unwrap(), 0.0);
    }

    #[test]
    fn inner_product_symmetry_and_errors() {
        let m = square(9);
        let a = random_field(&m, 1, BcMode::Tangential, 1).unwrap();
        let b = random_field(&m, 1, BcMode::None, 2).unwrap();
        assert_eq!(a.inner_product(&b).unwrap(), b.inner_product(&a).unwrap());
        let c = random_field(&m, 0, BcMode::None, 2).unwrap();
        assert!(a.inner_product(&c).is_err());
        let other = square(9);
        let d = random_field(&other, 1, BcMode::None, 2).unwrap();
        assert!(a.inner_product(&d).is_err());
    }

    #[test]
    fn random_fields_are_reproducible_and_constrained() {
        let m = square(17);
        let a = random_field(&m, 1, BcMode::FullDirichlet, 0).unwrap();
        let b = random_field(&m, 1, BcMode::FullDirichlet, 0).unwrap();
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let nv = m.num_vertices();
        for v in 0..nv {
            if m.classify(v) != VertexClass::Interior {
                for c in 0..2 {
                    assert_eq!(a.get(c, v), 0.0);
                }
            }
        }
        assert_eq!(a.constraint_violation(), 0.0);
        assert!(a.max_abs() <= 1.0 && a.max_abs() > 0.5);
    }

    #[test]
    fn tangential_box_keeps_only_normal_components() {
        let m = square(9);
        let e = random_field(&m, 1, BcMode::Tangential, 3).unwrap();
        let mut lower_face_normals = 0;
        for v in 0..m.num_vertices() {
            if m.classify(v) != VertexClass::Boundary {
                continue;
            }
            let x = m.coords(v);
            for axis in 0..2 {
                let on_face = x[axis] == 0 || x[axis] == 8;
                let other = 1 - axis;
                if on_face {
                    // tangential component of the face with normal `axis`
                    assert_eq!(e.get(other, v), 0.0, "vertex {x:?}");
                }
            }
            if x[0] == 0 && (1..8).contains(&x[1]) && e.get(0, v) != 0.0 {
                lower_face_normals += 1;
            }
        }
        assert_eq!(lower_face_normals, 7);
    }

    #[test]
    fn sym_skew_split() {
        let m = square(9);
        let t = TensorField::random(&m, BcMode::Tangential, 4).unwrap();
        let (s, k) = (t.sym_part(), t.skew_part());
        let back = s.add(&k).unwrap();
        for (r, row) in back.rows().iter().enumerate() {
            for (a, b) in row.data().iter().zip(t.row(r).data()) {
                assert!((a - b).abs() <= 1e-15);
            }
        }
        let lhs = s.norm_sq() + k.norm_sq();
        assert!((lhs - t.norm_sq()).abs() <= 1e-13 * t.norm_sq());
        for v in 0..m.num_vertices() {
            assert_eq!(s.get(0, 1, v), s.get(1, 0, v));
            assert_eq!(k.get(0, 1, v), -k.get(1, 0, v));
            assert_eq!(k.get(0, 0, v), 0.0);
        }
    }

    #[test]
    fn skew_input_has_no_symmetric_part() {
        let m = square(9);
        let t = TensorField::random_skew(&m, BcMode::FullDirichlet, 5).unwrap();
        assert!(t.norm() > 0.0);
        assert_eq!(t.sym_part().max_abs(), 0.0);
        for r in t.rows() {
            assert_eq!(r.constraint_violation(), 0.0);
        }
    }

    #[test]
    fn identity_tensor_is_symmetric() {
        let m = square(9);
        let rows = (0..2)
            .map(|i| FormField::from_fn(&m, 1, BcMode::FullDirichlet, move |c, _| if c == i { 1.0 } else { 0.0 }))
            .collect::<Result<Vec<_>>>()
            .unwrap();
        let t = TensorField::from_rows(rows).unwrap();
        assert_eq!(t.skew_part().max_abs(), 0.0);
        let s = t.sym_part();
        for (a, b) in s.rows().iter().zip(t.rows()) {
            assert_eq!(a.data(), b.data());
        }
    }
}
