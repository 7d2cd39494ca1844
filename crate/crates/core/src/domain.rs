//! Masked cubical grids.
//!
//! A domain lives on a box of `shape[0] x ... x shape[N-1]` vertices with
//! uniform spacing `h`; vertex `i` has coordinates `i * h`. The analytic
//! inclusion predicate marks vertices as inside. A unit cube of the lattice
//! is *active* when all `2^N` of its corners are inside, and the discrete
//! domain is the closed union of active cubes.
//!
//! Cells are addressed by their lowest corner and the set of axes they
//! span, which is exactly how form components are stored: component `I` at
//! vertex `x` is the value on the cell `x + [0,h]^I`. A cell is *interior*
//! when every cube containing it is active, and it belongs to the closed
//! domain when at least one is. Boundary cells form a subcomplex, so the
//! interior cells carry the relative cochains used for boundary conditions.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::ExteriorAlgebra;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Box,
    Ball,
    Annulus,
    Shell,
    SolidTorus,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Box => "box",
            DomainKind::Ball => "ball",
            DomainKind::Annulus => "annulus",
            DomainKind::Shell => "shell",
            DomainKind::SolidTorus => "solid_torus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "box" => Some(DomainKind::Box),
            "ball" => Some(DomainKind::Ball),
            "annulus" => Some(DomainKind::Annulus),
            "shell" => Some(DomainKind::Shell),
            "solid_torus" | "torus" => Some(DomainKind::SolidTorus),
            _ => None,
        }
    }
}

/// Shape parameters in physical units. Unused fields are ignored by kinds
/// that do not need them; `None` picks a default relative to the bounding
/// box `[0, L]^N`, `L = (n - 1) h`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub center: Option<Vec<f64>>,
    /// Ball radius, or outer radius for annulus and shell.
    pub radius: Option<f64>,
    pub inner_radius: Option<f64>,
    pub major_radius: Option<f64>,
    pub minor_radius: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexClass {
    Exterior,
    Boundary,
    Interior,
}

/// Boundary-condition encodings for forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcMode {
    /// Every component vanishes at boundary vertices.
    FullDirichlet,
    /// Values live on interior cells only: tangential components vanish.
    Tangential,
    /// Any cell of the closed domain.
    None,
}

impl BcMode {
    pub fn name(self) -> &'static str {
        match self {
            BcMode::FullDirichlet => "full_dirichlet",
            BcMode::Tangential => "tangential",
            BcMode::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "full" | "full_dirichlet" | "dirichlet" => Some(BcMode::FullDirichlet),
            "tangential" | "tan" => Some(BcMode::Tangential),
            "none" => Some(BcMode::None),
            _ => None,
        }
    }

    fn slot(self) -> usize {
        match self {
            BcMode::FullDirichlet => 0,
            BcMode::Tangential => 1,
            BcMode::None => 2,
        }
    }
}

/// Free degrees of freedom of a `q`-form under a boundary mode, as flat
/// offsets into component-major storage.
#[derive(Debug)]
pub struct DofSpace {
    pub q: usize,
    pub mode: BcMode,
    pub free: Vec<usize>,
    pub mask: Vec<bool>,
}

impl DofSpace {
    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    pub fn gather(&self, data: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| data[i]).collect()
    }

    pub fn scatter_into(&self, values: &[f64], data: &mut [f64]) {
        data.iter_mut().for_each(|v| *v = 0.0);
        for (&i, &v) in self.free.iter().zip(values) {
            data[i] = v;
        }
    }

    /// Zeroes every constrained entry.
    pub fn project(&self, data: &mut [f64]) {
        for (v, &keep) in data.iter_mut().zip(&self.mask) {
            if !keep {
                *v = 0.0;
            }
        }
    }
}

#[derive(Debug)]
pub struct DomainMask {
    kind: DomainKind,
    geometry: Geometry,
    shape: Vec<usize>,
    strides: Vec<usize>,
    h: f64,
    inside: Vec<bool>,
    active: Vec<bool>,
    class: Vec<VertexClass>,
    boundary_components: usize,
    algebra: Arc<ExteriorAlgebra>,
    spaces: Vec<OnceLock<Arc<DofSpace>>>,
}

impl DomainMask {
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_vertices(&self) -> usize {
        self.inside.len()
    }

    pub fn algebra(&self) -> &ExteriorAlgebra {
        &self.algebra
    }

    /// Analytic inclusion of the vertex (before cube closure).
    pub fn is_inside(&self, v: usize) -> bool {
        self.inside[v]
    }

    pub fn is_active_cube(&self, v: usize) -> bool {
        self.active[v]
    }

    pub fn classify(&self, v: usize) -> VertexClass {
        self.class[v]
    }

    pub fn classification(&self) -> &[VertexClass] {
        &self.class
    }

    pub fn boundary_components(&self) -> usize {
        self.boundary_components
    }

    pub fn count(&self, class: VertexClass) -> usize {
        self.class.iter().filter(|&&c| c == class).count()
    }

    /// Lattice coordinate of vertex `v` along `axis`.
    #[inline]
    pub fn coord(&self, v: usize, axis: usize) -> usize {
        (v / self.strides[axis]) % self.shape[axis]
    }

    pub fn coords(&self, v: usize) -> Vec<usize> {
        (0..self.dim()).map(|a| self.coord(v, a)).collect()
    }

    pub fn position(&self, v: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.coord(v, a) as f64 * self.h).collect()
    }

    pub fn describe(&self) -> String {
        let shape: Vec<String> = self.shape.iter().map(|s| s.to_string()).collect();
        format!("{} N={} {} h={}", self.kind.name(), self.dim(), shape.join("x"), self.h)
    }

    /// Calls `f` with the lowest corner of every cube containing the cell
    /// `(v, axes)`; returns false as soon as `f` does. Cubes that would
    /// leave the lattice are reported as `None`.
    fn for_each_coface_cube(&self, v: usize, span: u32, mut f: impl FnMut(Option<usize>) -> bool) -> bool {
        let n = self.dim();
        let free_axes: Vec<usize> = (0..n).filter(|a| span & (1 << a) == 0).collect();
        // the cell itself must fit in the lattice
        for a in 0..n {
            if span & (1 << a) != 0 && self.coord(v, a) + 1 >= self.shape[a] {
                return f(None);
            }
        }
        for subset in 0u32..(1 << free_axes.len()) {
            let mut corner = Some(v);
            for (bit, &a) in free_axes.iter().enumerate() {
                let c = self.coord(v, a);
                let shift_down = subset & (1 << bit) != 0;
                let lowest = if shift_down { c.checked_sub(1) } else { Some(c) };
                match lowest {
                    Some(l) if l + 1 < self.shape[a] => {
                        if shift_down {
                            corner = corner.map(|x| x - self.strides[a]);
                        }
                    }
                    _ => corner = None,
                }
            }
            if !f(corner) {
                return false;
            }
        }
        true
    }

    /// True when every cube around the cell is active.
    pub fn cell_is_interior(&self, v: usize, span: u32) -> bool {
        self.for_each_coface_cube(v, span, |c| c.is_some_and(|c| self.active[c]))
    }

    /// True when some cube around the cell is active.
    pub fn cell_in_domain(&self, v: usize, span: u32) -> bool {
        let mut found = false;
        self.for_each_coface_cube(v, span, |c| {
            if c.is_some_and(|c| self.active[c]) {
                found = true;
                false
            } else {
                true
            }
        });
        found
    }

    /// Free-DOF layout of `q`-forms under `mode`, computed once.
    pub fn space(&self, q: usize, mode: BcMode) -> Result<Arc<DofSpace>> {
        if q > self.dim() {
            return Err(Error::DegreeOutOfRange { dim: self.dim(), degree: q });
        }
        let slot = q * 3 + mode.slot();
        Ok(self.spaces[slot].get_or_init(|| Arc::new(self.build_space(q, mode))).clone())
    }

    fn build_space(&self, q: usize, mode: BcMode) -> DofSpace {
        let nv = self.num_vertices();
        let indices = self.algebra.indices(q);
        let mut mask = vec![false; indices.len() * nv];
        for (c, idx) in indices.iter().enumerate() {
            let span: u32 = idx.axes().fold(0, |s, a| s | (1 << a));
            for v in 0..nv {
                let keep = match mode {
                    BcMode::Tangential => self.cell_is_interior(v, span),
                    BcMode::FullDirichlet => self.class[v] == VertexClass::Interior && self.cell_is_interior(v, span),
                    BcMode::None => self.cell_in_domain(v, span),
                };
                mask[c * nv + v] = keep;
            }
        }
        let free = mask.iter().enumerate().filter_map(|(i, &k)| k.then_some(i)).collect();
        DofSpace { q, mode, free, mask }
    }
}

fn strides_for(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    strides
}

/// Builds a domain from an explicit inclusion predicate on lattice
/// coordinates.
pub fn from_predicate(
    kind: DomainKind,
    geometry: Geometry,
    shape: &[usize],
    h: f64,
    inside: impl Fn(&[f64]) -> bool,
) -> Result<DomainMask> {
    let dim = shape.len();
    if dim == 0 || dim > 8 {
        return Err(Error::InvalidDomain(format!("dimension {dim} not supported (1..=8)")));
    }
    if shape.iter().any(|&n| n < 3) {
        return Err(Error::InvalidDomain(format!("resolution {shape:?} below 3 vertices per axis")));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidDomain(format!("spacing h = {h} must be positive")));
    }
    let strides = strides_for(shape);
    let nv: usize = shape.iter().product();
    let coords = |v: usize| -> Vec<f64> { (0..dim).map(|a| ((v / strides[a]) % shape[a]) as f64 * h).collect() };
    let inside: Vec<bool> = (0..nv).map(|v| inside(&coords(v))).collect();

    // cube with lowest corner v is active iff it fits and all corners are inside
    let mut active = vec![false; nv];
    for (v, slot) in active.iter_mut().enumerate() {
        let fits = (0..dim).all(|a| (v / strides[a]) % shape[a] + 1 < shape[a]);
        if !fits {
            continue;
        }
        *slot = (0u32..(1 << dim)).all(|corner| {
            let off: usize = (0..dim).filter(|a| corner & (1 << a) != 0).map(|a| strides[a]).sum();
            inside[v + off]
        });
    }
    if !active.iter().any(|&a| a) {
        return Err(Error::InvalidDomain("mask contains no complete lattice cube".into()));
    }

    let algebra = Arc::new(ExteriorAlgebra::new(dim)?);
    let spaces = (0..(dim + 1) * 3).map(|_| OnceLock::new()).collect();
    let mut mask = DomainMask {
        kind,
        geometry,
        shape: shape.to_vec(),
        strides,
        h,
        inside,
        active,
        class: Vec::new(),
        boundary_components: 0,
        algebra,
        spaces,
    };
    mask.class = (0..nv)
        .map(|v| {
            if mask.cell_is_interior(v, 0) {
                VertexClass::Interior
            } else if mask.cell_in_domain(v, 0) {
                VertexClass::Boundary
            } else {
                VertexClass::Exterior
            }
        })
        .collect();
    mask.boundary_components = count_boundary_components(&mask);
    Ok(mask)
}

/// Boundary components counted as components of the complement: inactive
/// cubes on a grid padded by one layer, joined across shared faces. The
/// padding makes the unbounded outside a single component.
fn count_boundary_components(mask: &DomainMask) -> usize {
    let dim = mask.dim();
    let cells: Vec<usize> = mask.shape.iter().map(|&n| n + 1).collect();
    let mut cstrides = vec![1usize; dim];
    for a in (0..dim.saturating_sub(1)).rev() {
        cstrides[a] = cstrides[a + 1] * cells[a + 1];
    }
    let total: usize = cells.iter().product();
    // padded cell c covers lattice cube c - 1 along every axis
    let is_active = |c: usize| -> bool {
        let mut v = 0;
        for a in 0..dim {
            let k = (c / cstrides[a]) % cells[a];
            if k == 0 || k + 1 >= cells[a] {
                return false;
            }
            v += (k - 1) * mask.strides[a];
        }
        mask.active[v]
    };
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let free: Vec<bool> = (0..total).map(|c| !is_active(c)).collect();
    for c in 0..total {
        if !free[c] {
            continue;
        }
        for a in 0..dim {
            if (c / cstrides[a]) % cells[a] + 1 >= cells[a] {
                continue;
            }
            let d = c + cstrides[a];
            if free[d] {
                let (rc, rd) = (find(&mut parent, c), find(&mut parent, d));
                if rc != rd {
                    parent[rc] = rd;
                }
            }
        }
    }
    (0..total).filter(|&c| free[c] && find(&mut parent, c) == c).count()
}

/// Builds one of the stock domains. Curved shapes are staircase
/// approximations: a vertex is inside iff its coordinates satisfy the
/// analytic inclusion.
pub fn make_domain(kind: DomainKind, geometry: &Geometry, shape: &[usize], h: f64) -> Result<DomainMask> {
    let dim = shape.len();
    let extent: Vec<f64> = shape.iter().map(|&n| (n.max(1) - 1) as f64 * h).collect();
    let center = match &geometry.center {
        Some(c) if c.len() == dim => c.clone(),
        Some(c) => return Err(Error::InvalidDomain(format!("center {c:?} does not match dimension {dim}"))),
        None => extent.iter().map(|e| e / 2.0).collect(),
    };
    let half_min = extent.iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;
    let dist2 = move |x: &[f64], c: &[f64]| -> f64 { x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum() };
    let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::InvalidDomain(msg.to_string())) };

    match kind {
        DomainKind::Box => from_predicate(kind, geometry.clone(), shape, h, |_| true),
        DomainKind::Ball => {
            let r = geometry.radius.unwrap_or(half_min);
            need(r > 0.0, "ball radius must be positive")?;
            let c = center.clone();
            from_predicate(kind, geometry.clone(), shape, h, move |x| dist2(x, &c) <= r * r)
        }
        DomainKind::Annulus | DomainKind::Shell => {
            let want = if kind == DomainKind::Annulus { 2 } else { 3 };
            need(dim == want, &format!("{} requires N = {want}", kind.name()))?;
            let outer = geometry.radius.unwrap_or(half_min);
            let inner = geometry.inner_radius.unwrap_or(outer / 2.0);
            need(inner > 0.0 && inner < outer, "inner radius must lie in (0, outer radius)")?;
            let c = center.clone();
            from_predicate(kind, geometry.clone(), shape, h, move |x| {
                let d2 = dist2(x, &c);
                d2 >= inner * inner && d2 <= outer * outer
            })
        }
        DomainKind::SolidTorus => {
            need(dim == 3, "solid_torus requires N = 3")?;
            let major = geometry.major_radius.unwrap_or(0.6 * half_min);
            let minor = geometry.minor_radius.unwrap_or(0.3 * half_min);
            need(minor > 0.0 && minor < major, "minor radius must lie in (0, major radius)")?;
            let c = center.clone();
            from_predicate(kind, geometry.clone(), shape, h, move |x| {
                let (dx, dy, dz) = (x[0] - c[0], x[1] - c[1], x[2] - c[2]);
                let rho = (dx * dx + dy * dy).sqrt() - major;
                rho * rho + dz * dz <= minor * minor
            })
        }
    }
}

/// Convenience: `n` vertices per axis over the unit cube, `h = 1/(n-1)`.
pub fn unit_domain(kind: DomainKind, dim: usize, n: usize) -> Result<DomainMask> {
    if n < 3 {
        return Err(Error::InvalidDomain(format!("resolution {n} below 3")));
    }
    make_domain(kind, &Geometry::default(), &vec![n; dim], 1.0 / (n - 1) as f64)
}
