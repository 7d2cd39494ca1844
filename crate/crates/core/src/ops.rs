//! Matrix-free first-order operators on collocated fields.
//!
//! `d` uses forward differences with zero extension past the lattice and
//! the incidence signs of [`crate::exterior`]. Its exact adjoint under the
//! `h^N`-weighted inner product uses backward differences, and the
//! coderivative is the negative adjoint, `delta = -d^t`, so
//! `<dE, H> = -<E, delta H>` holds identically. Forward and backward
//! differences along different axes commute, which makes `d d = 0` and the
//! Korn identity `2|sym Grad v|^2 = |Grad v|^2 + |div v|^2` exact up to
//! rounding.

use std::sync::Arc;

use rayon::prelude::*;

use crate::domain::{BcMode, DomainMask};
use crate::error::{Error, Result};
use crate::field::{CurlField, FormField, TensorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorName {
    D,
    Delta,
    Grad,
    Curl,
    Div,
    TensorGrad,
    TensorCurl,
    TensorDiv,
}

/// Shape bookkeeping for an operator in dimension `dim`: input/output are
/// (rows, form degree, components per row).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorDescriptor {
    pub name: OperatorName,
    pub rows: usize,
    pub input_degree: usize,
    pub output_degree: usize,
    pub input_components: usize,
    pub output_components: usize,
}

pub fn descriptor(name: OperatorName, dim: usize, q: usize) -> Result<OperatorDescriptor> {
    use crate::exterior::binomial;
    let (rows, from, to) = match name {
        OperatorName::D if q < dim => (1, q, q + 1),
        OperatorName::Delta if q >= 1 && q <= dim => (1, q, q - 1),
        OperatorName::Grad => (1, 0, 1),
        OperatorName::Curl if dim >= 1 => (1, 1, 2),
        OperatorName::Div => (1, 1, 0),
        OperatorName::TensorGrad => (dim, 0, 1),
        OperatorName::TensorCurl => (dim, 1, 2),
        OperatorName::TensorDiv => (dim, 1, 0),
        _ => return Err(Error::DegreeOutOfRange { dim, degree: q }),
    };
    Ok(OperatorDescriptor {
        name,
        rows,
        input_degree: from,
        output_degree: to,
        input_components: binomial(dim, from),
        output_components: binomial(dim, to),
    })
}

/// Full-lattice `d` on raw component-major storage of a `q`-form.
pub(crate) fn d_raw(mask: &DomainMask, q: usize, src: &[f64]) -> Vec<f64> {
    let nv = mask.num_vertices();
    let alg = mask.algebra();
    let ncomp = alg.components(q + 1);
    let table = alg.incidence(q);
    let inv_h = 1.0 / mask.h();
    let mut out = vec![0.0; ncomp * nv];
    out.par_chunks_mut(nv).enumerate().for_each(|(t, dst)| {
        for e in table.iter().filter(|e| e.target_rank == t) {
            let axis = e.direction - 1;
            let stride = mask.strides()[axis];
            let n_axis = mask.shape()[axis];
            let s = &src[e.source_rank * nv..(e.source_rank + 1) * nv];
            let sign = e.sign as f64;
            // vertices split as (outer, coordinate along axis, inner) with
            // the inner run contiguous
            for block in (0..nv).step_by(stride * n_axis) {
                for c in 0..n_axis {
                    let base = block + c * stride;
                    let out = &mut dst[base..base + stride];
                    let cur = &s[base..base + stride];
                    if c + 1 < n_axis {
                        let next = &s[base + stride..base + 2 * stride];
                        for ((o, n), x) in out.iter_mut().zip(next).zip(cur) {
                            *o += sign * ((n - x) * inv_h);
                        }
                    } else {
                        for (o, x) in out.iter_mut().zip(cur) {
                            *o += sign * ((0.0 - x) * inv_h);
                        }
                    }
                }
            }
        }
    });
    out
}

/// Full-lattice adjoint `d^t` from degree `q + 1` to degree `q`.
pub(crate) fn dt_raw(mask: &DomainMask, q: usize, src: &[f64]) -> Vec<f64> {
    let nv = mask.num_vertices();
    let alg = mask.algebra();
    let ncomp = alg.components(q);
    let table = alg.incidence(q);
    let inv_h = 1.0 / mask.h();
    let mut out = vec![0.0; ncomp * nv];
    out.par_chunks_mut(nv).enumerate().for_each(|(s_rank, dst)| {
        for e in table.iter().filter(|e| e.source_rank == s_rank) {
            let axis = e.direction - 1;
            let stride = mask.strides()[axis];
            let n_axis = mask.shape()[axis];
            let t = &src[e.target_rank * nv..(e.target_rank + 1) * nv];
            let sign = e.sign as f64;
            for block in (0..nv).step_by(stride * n_axis) {
                for c in 0..n_axis {
                    let base = block + c * stride;
                    let out = &mut dst[base..base + stride];
                    let cur = &t[base..base + stride];
                    if c > 0 {
                        let prev = &t[base - stride..base];
                        for ((o, p), x) in out.iter_mut().zip(prev).zip(cur) {
                            *o += sign * ((p - x) * inv_h);
                        }
                    } else {
                        for (o, x) in out.iter_mut().zip(cur) {
                            *o += sign * ((0.0 - x) * inv_h);
                        }
                    }
                }
            }
        }
    });
    out
}

/// Boundary mode of `dE` given the mode of `E`: the interior cells form a
/// subcomplex, so Dirichlet and tangential inputs both land in the
/// tangential space.
fn d_output_mode(bc: BcMode) -> BcMode {
    match bc {
        BcMode::FullDirichlet | BcMode::Tangential => BcMode::Tangential,
        BcMode::None => BcMode::None,
    }
}

/// Exterior derivative `(dE)_J(x) = sum_p (-1)^p [E_{J\j_p}(x + h e_{j_p}) - E_{J\j_p}(x)] / h`.
pub fn exterior_derivative(e: &FormField) -> Result<FormField> {
    let mask = e.mask();
    let q = e.degree();
    if q >= mask.dim() {
        return Err(Error::DegreeOverflow(q));
    }
    let mut data = d_raw(mask, q, e.data());
    let bc = d_output_mode(e.bc());
    mask.space(q + 1, bc)?.project(&mut data);
    Ok(FormField::raw(mask.clone(), q + 1, bc, data))
}

/// Coderivative `delta = -d^t` with backward differences. The result is
/// supported on cells of the closed domain and carries no boundary label.
pub fn coderivative(h: &FormField) -> Result<FormField> {
    let mask = h.mask();
    let q = h.degree();
    if q == 0 {
        return Err(Error::DegreeUnderflow);
    }
    let mut data = dt_raw(mask, q - 1, h.data());
    data.iter_mut().for_each(|v| *v = -*v);
    mask.space(q - 1, BcMode::None)?.project(&mut data);
    Ok(FormField::raw(mask.clone(), q - 1, BcMode::None, data))
}

/// Coderivative tested only against `(q-1)`-forms of `mode`: the orthogonal
/// projection of [`coderivative`] onto that space. With
/// `mode = Tangential` this is the adjoint of `d` inside the boundary
/// subcomplex, the operator whose kernel is the solenoidal part of the
/// Hodge-Helmholtz split.
pub fn weak_coderivative(h: &FormField, mode: BcMode) -> Result<FormField> {
    let full = coderivative(h)?;
    let q = full.degree();
    let mut data = full.into_data();
    h.mask().space(q, mode)?.project(&mut data);
    Ok(FormField::raw(h.mask().clone(), q, mode, data))
}

pub fn grad(u: &FormField) -> Result<FormField> {
    expect_degree(u, 0)?;
    exterior_derivative(u)
}

/// The `(N-1)N/2`-component curl of a vector field (1-form).
pub fn curl(v: &FormField) -> Result<FormField> {
    expect_degree(v, 1)?;
    exterior_derivative(v)
}

/// Backward-difference (adjoint) divergence.
pub fn div(v: &FormField) -> Result<FormField> {
    expect_degree(v, 1)?;
    coderivative(v)
}

fn expect_degree(f: &FormField, q: usize) -> Result<()> {
    if f.degree() != q {
        return Err(Error::Incompatible(format!("expected a {q}-form, got degree {}", f.degree())));
    }
    Ok(())
}

fn check_vector(v: &[FormField]) -> Result<&Arc<DomainMask>> {
    let first = v.first().ok_or_else(|| Error::Incompatible("empty vector field".into()))?;
    let mask = first.mask();
    if v.len() != mask.dim() {
        return Err(Error::Incompatible(format!("{} components in dimension {}", v.len(), mask.dim())));
    }
    for c in v {
        expect_degree(c, 0)?;
        if !Arc::ptr_eq(c.mask(), mask) || c.bc() != first.bc() {
            return Err(Error::Incompatible("vector components must share mask and mode".into()));
        }
    }
    Ok(mask)
}

/// Row-wise gradient: `(Grad v)_n = grad v_n`, the Jacobian.
pub fn grad_rows(v: &[FormField]) -> Result<TensorField> {
    check_vector(v)?;
    TensorField::from_rows(v.iter().map(grad).collect::<Result<Vec<_>>>()?)
}

/// Row-wise curl: `(Curl T)_{i,(j,k)} = D_j T_ik - D_k T_ij`.
pub fn curl_rows(t: &TensorField) -> Result<CurlField> {
    Ok(CurlField::from_rows(t.rows().iter().map(curl).collect::<Result<Vec<_>>>()?))
}

/// Row-wise (adjoint) divergence: one 0-form per row.
pub fn div_rows(t: &TensorField) -> Result<Vec<FormField>> {
    t.rows().iter().map(div).collect()
}

/// Row-wise divergence tested against Dirichlet functions only.
pub fn weak_div_rows(t: &TensorField) -> Result<Vec<FormField>> {
    t.rows().iter().map(|r| weak_coderivative(r, BcMode::Tangential)).collect()
}

/// Packs `N` Dirichlet functions into one vertex-collocated 1-form
/// (component `n` = `v_n`), the vector field whose divergence enters the
/// Korn identity.
pub fn vector_as_one_form(v: &[FormField]) -> Result<FormField> {
    let mask = check_vector(v)?;
    if v[0].bc() == BcMode::None {
        return Err(Error::Incompatible("vector field packing needs Dirichlet components".into()));
    }
    let data: Vec<f64> = v.iter().flat_map(|c| c.data().iter().copied()).collect();
    FormField::from_data(mask, 1, BcMode::FullDirichlet, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{unit_domain, DomainKind, VertexClass};
    use crate::field::random_field;

    fn grid(kind: DomainKind, dim: usize, n: usize) -> Arc<DomainMask> {
        Arc::new(unit_domain(kind, dim, n).unwrap())
    }

    #[test]
    fn descriptor_shapes() {
        let c = descriptor(OperatorName::Curl, 4, 1).unwrap();
        assert_eq!((c.input_components, c.output_components), (4, 6));
        let c = descriptor(OperatorName::TensorCurl, 5, 1).unwrap();
        assert_eq!((c.rows, c.output_components), (5, 10));
        assert!(descriptor(OperatorName::D, 3, 3).is_err());
        assert!(descriptor(OperatorName::Delta, 3, 0).is_err());
    }

    #[test]
    fn degree_errors() {
        let m = grid(DomainKind::Box, 2, 5);
        let top = FormField::zeros(&m, 2, BcMode::None).unwrap();
        assert!(matches!(exterior_derivative(&top), Err(Error::DegreeOverflow(2))));
        let bottom = FormField::zeros(&m, 0, BcMode::None).unwrap();
        assert!(matches!(coderivative(&bottom), Err(Error::DegreeUnderflow)));
    }

    #[test]
    fn gradient_of_affine_data() {
        let m = grid(DomainKind::Box, 3, 7);
        let a = [0.5, -1.25, 2.0];
        let u = FormField::from_fn(&m, 0, BcMode::None, |_, v| {
            let x = m.position(v);
            1.0 + a[0] * x[0] + a[1] * x[1] + a[2] * x[2]
        })
        .unwrap();
        let g = grad(&u).unwrap();
        for v in 0..m.num_vertices() {
            let c = m.coords(v);
            for axis in 0..3 {
                if c[axis] + 1 < 7 {
                    assert!((g.get(axis, v) - a[axis]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn four_dim_curl_component_order() {
        let m = grid(DomainKind::Box, 4, 5);
        let v = random_field(&m, 1, BcMode::Tangential, 9).unwrap();
        let c = curl(&v).unwrap();
        // forward difference of component k along axis a, by hand
        let dv = |k: usize, a: usize, x: usize| {
            let s = m.strides()[a];
            let next = if m.coord(x, a) + 1 < 5 { v.get(k, x + s) } else { 0.0 };
            (next - v.get(k, x)) / m.h()
        };
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for x in 0..m.num_vertices() {
            for (rank, &(n, k)) in pairs.iter().enumerate() {
                let expect = dv(k, n, x) - dv(n, k, x);
                assert!((c.get(rank, x) - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn d_squared_vanishes() {
        for (dim, n) in [(2, 9), (3, 7), (4, 5)] {
            let m = grid(DomainKind::Box, dim, n);
            for q in 0..dim - 1 {
                for bc in [BcMode::None, BcMode::Tangential] {
                    let e = random_field(&m, q, bc, 11).unwrap();
                    let dd = exterior_derivative(&exterior_derivative(&e).unwrap()).unwrap();
                    let h = m.h();
                    assert!(dd.norm() <= 1e-14 * e.norm() / (h * h), "N={dim} q={q}");
                    let hh = random_field(&m, q + 2, bc, 12).unwrap();
                    let ss = coderivative(&coderivative(&hh).unwrap()).unwrap();
                    assert!(ss.norm() <= 1e-14 * hh.norm() / (h * h));
                }
            }
        }
    }

    #[test]
    fn duality_on_curved_domain() {
        let m = grid(DomainKind::Ball, 3, 9);
        for q in 0..3 {
            for bc in [BcMode::FullDirichlet, BcMode::Tangential, BcMode::None] {
                let e = random_field(&m, q, bc, 1).unwrap();
                let h = random_field(&m, q + 1, BcMode::None, 2).unwrap();
                let lhs = exterior_derivative(&e).unwrap().inner_product(&h).unwrap();
                let rhs = e.inner_product(&coderivative(&h).unwrap()).unwrap();
                assert!((lhs + rhs).abs() <= 1e-13 * e.norm() * h.norm() / m.h(), "q={q} {bc:?}");
            }
        }
    }

    #[test]
    fn d_preserves_tangential_space() {
        let m = grid(DomainKind::Annulus, 2, 17);
        for q in 0..2 {
            let e = random_field(&m, q, BcMode::Tangential, 5).unwrap();
            let de = d_raw(&m, q, e.data());
            let space = m.space(q + 1, BcMode::Tangential).unwrap();
            for (i, v) in de.iter().enumerate() {
                if !space.mask[i] {
                    assert_eq!(*v, 0.0);
                }
            }
        }
    }

    #[test]
    fn constant_field_has_vanishing_divergence_inside() {
        let m = grid(DomainKind::Box, 2, 9);
        let hfield = FormField::from_fn(&m, 1, BcMode::None, |_, _| 1.0).unwrap();
        let d = div(&hfield).unwrap();
        for v in 0..m.num_vertices() {
            let c = m.coords(v);
            // full backward stencil inside the closed domain
            if c.iter().all(|&x| x >= 1) && c.iter().all(|&x| x <= 7) {
                assert!(d.get(0, v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delta_grad_is_five_point_laplacian() {
        let m = grid(DomainKind::Box, 2, 9);
        let u = random_field(&m, 0, BcMode::FullDirichlet, 3).unwrap();
        let lap = coderivative(&grad(&u).unwrap()).unwrap();
        let h2 = m.h() * m.h();
        let (sx, sy) = (m.strides()[0], m.strides()[1]);
        for v in 0..m.num_vertices() {
            if m.classify(v) != VertexClass::Interior {
                continue;
            }
            let expect =
                (4.0 * u.get(0, v) - u.get(0, v - sx) - u.get(0, v + sx) - u.get(0, v - sy) - u.get(0, v + sy)) / h2;
            // d^t d u is the positive 5-point stencil and delta = -d^t
            assert!((lap.get(0, v) + expect).abs() <= 1e-10 * (1.0 + expect.abs()), "{} vs {}", lap.get(0, v), -expect);
        }
    }

    #[test]
    fn curl_of_grad_is_zero() {
        let m = grid(DomainKind::Ball, 3, 9);
        let v: Vec<FormField> = (0..3).map(|s| random_field(&m, 0, BcMode::FullDirichlet, s).unwrap()).collect();
        let g = grad_rows(&v).unwrap();
        let c = curl_rows(&g).unwrap();
        assert!(c.norm() <= 1e-14 * g.norm() / m.h());
    }

    #[test]
    fn affine_rows_give_constant_jacobian() {
        let m = grid(DomainKind::Box, 2, 9);
        let jac = [[1.0, 2.0], [-3.0, 0.5]];
        let v: Vec<FormField> = (0..2)
            .map(|i| {
                FormField::from_fn(&m, 0, BcMode::None, |_, x| {
                    let p = m.position(x);
                    jac[i][0] * p[0] + jac[i][1] * p[1]
                })
                .unwrap()
            })
            .collect();
        let g = TensorField::from_rows(v.iter().map(|c| grad(c).unwrap()).collect()).unwrap();
        for x in 0..m.num_vertices() {
            let c = m.coords(x);
            if c[0] < 8 && c[1] < 8 {
                for i in 0..2 {
                    for k in 0..2 {
                        assert!((g.get(i, k, x) - jac[i][k]).abs() < 1e-12);
                    }
                }
            }
        }
        // a pointwise constant tensor is curl-free away from the lattice edge
        let curl = curl_rows(&g).unwrap();
        for x in 0..m.num_vertices() {
            let c = m.coords(x);
            if c[0] < 7 && c[1] < 7 {
                assert!(curl.get(0, 0, 1, x).abs() < 1e-9 && curl.get(1, 1, 0, x).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn korn_identity_is_exact() {
        let m = grid(DomainKind::Ball, 2, 17);
        let v: Vec<FormField> = (0..2).map(|s| random_field(&m, 0, BcMode::FullDirichlet, 40 + s).unwrap()).collect();
        let g = grad_rows(&v).unwrap();
        let dv = div(&vector_as_one_form(&v).unwrap()).unwrap();
        let lhs = 2.0 * g.sym_part().norm_sq();
        let rhs = g.norm_sq() + dv.norm_sq();
        assert!((lhs - rhs).abs() <= 1e-13 * rhs);
    }
}
