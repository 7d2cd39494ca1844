//! Plain-text field snapshots.
//!
//! ```text
//! ndkorn-snapshot 1
//! field tensor            # or: form
//! domain box
//! dim 2
//! shape 17 17
//! h 0.0625
//! geometry radius=0.5     # only the parameters that were set
//! degree 1
//! rows 2
//! bc full
//! components 1 2          # multi-indices in storage order, "-" for ()
//! meta assertion iv       # any number of free key/value lines
//! values 1156
//! 0
//! -0.3721...
//! ...
//! end
//! ```
//!
//! Values are written in shortest round-trip form: row by row, component
//! by component, vertices row-major with axis 0 slowest. Reading a
//! snapshot and rebuilding its domain reproduces the field bit for bit.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::domain::{make_domain, BcMode, DomainKind, DomainMask, Geometry};
use crate::error::{Error, Result};
use crate::field::{FormField, TensorField};

const MAGIC: &str = "ndkorn-snapshot 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Form,
    Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub field: FieldKind,
    pub domain: DomainKind,
    pub geometry: Geometry,
    pub shape: Vec<usize>,
    pub h: f64,
    pub degree: usize,
    pub rows: usize,
    pub bc: BcMode,
    pub meta: Vec<(String, String)>,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_form(e: &FormField) -> Self {
        Self::build(FieldKind::Form, e.mask(), e.degree(), 1, e.bc(), e.data().to_vec())
    }

    pub fn from_tensor(t: &TensorField) -> Self {
        let values = t.rows().iter().flat_map(|r| r.data().iter().copied()).collect();
        Self::build(FieldKind::Tensor, t.mask(), 1, t.dim(), t.bc(), values)
    }

    fn build(field: FieldKind, mask: &DomainMask, degree: usize, rows: usize, bc: BcMode, values: Vec<f64>) -> Self {
        Self {
            field,
            domain: mask.kind(),
            geometry: mask.geometry().clone(),
            shape: mask.shape().to_vec(),
            h: mask.h(),
            degree,
            rows,
            bc,
            meta: Vec::new(),
            values,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn render(&self) -> Result<String> {
        let dim = self.dim();
        let indices = crate::exterior::enumerate_multi_indices(dim, self.degree)?;
        let mut s = String::new();
        let join = |v: &[String]| v.join(" ");
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "field {}", if self.field == FieldKind::Tensor { "tensor" } else { "form" });
        let _ = writeln!(s, "domain {}", self.domain.name());
        let _ = writeln!(s, "dim {dim}");
        let _ = writeln!(s, "shape {}", join(&self.shape.iter().map(|x| x.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(s, "h {}", self.h);
        let g = &self.geometry;
        let mut parts = Vec::new();
        if let Some(c) = &g.center {
            parts.push(format!("center={}", c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")));
        }
        for (name, value) in [
            ("radius", g.radius),
            ("inner_radius", g.inner_radius),
            ("major_radius", g.major_radius),
            ("minor_radius", g.minor_radius),
        ] {
            if let Some(x) = value {
                parts.push(format!("{name}={x}"));
            }
        }
        if !parts.is_empty() {
            let _ = writeln!(s, "geometry {}", parts.join(" "));
        }
        let _ = writeln!(s, "degree {}", self.degree);
        let _ = writeln!(s, "rows {}", self.rows);
        let _ = writeln!(s, "bc {}", self.bc.name());
        let comps: Vec<String> = indices
            .iter()
            .map(|m| {
                if m.entries().is_empty() {
                    "-".to_string()
                } else {
                    m.entries().iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
                }
            })
            .collect();
        let _ = writeln!(s, "components {}", join(&comps));
        for (k, v) in &self.meta {
            if k.contains(char::is_whitespace) || v.contains('\n') {
                return Err(Error::Snapshot(format!("meta entry {k:?} cannot be written on one line")));
            }
            let _ = writeln!(s, "meta {k} {v}");
        }
        let _ = writeln!(s, "values {}", self.values.len());
        for v in &self.values {
            let _ = writeln!(s, "{v}");
        }
        s.push_str("end\n");
        Ok(s)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.render()?)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Snapshot(msg);
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("missing header line".into()));
        }
        let mut field = None;
        let mut domain = None;
        let mut geometry = Geometry::default();
        let mut shape = None;
        let mut h = None;
        let mut degree = None;
        let mut rows = None;
        let mut bc = None;
        let mut dim = None;
        let mut components = None;
        let mut meta = Vec::new();
        let mut values = None;
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("not a number: {s:?}")));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("not an integer: {s:?}")));
        while let Some(line) = lines.next() {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "field" => {
                    field = Some(match rest {
                        "form" => FieldKind::Form,
                        "tensor" => FieldKind::Tensor,
                        other => return Err(bad(format!("unknown field kind {other:?}"))),
                    })
                }
                "domain" => {
                    domain = Some(DomainKind::parse(rest).ok_or_else(|| bad(format!("unknown domain {rest:?}")))?)
                }
                "dim" => dim = Some(int(rest)?),
                "shape" => shape = Some(rest.split_whitespace().map(int).collect::<Result<Vec<_>>>()?),
                "h" => h = Some(num(rest)?),
                "geometry" => {
                    for part in rest.split_whitespace() {
                        let (k, v) = part.split_once('=').ok_or_else(|| bad(format!("bad geometry entry {part:?}")))?;
                        match k {
                            "center" => geometry.center = Some(v.split(',').map(num).collect::<Result<Vec<_>>>()?),
                            "radius" => geometry.radius = Some(num(v)?),
                            "inner_radius" => geometry.inner_radius = Some(num(v)?),
                            "major_radius" => geometry.major_radius = Some(num(v)?),
                            "minor_radius" => geometry.minor_radius = Some(num(v)?),
                            _ => return Err(bad(format!("unknown geometry parameter {k:?}"))),
                        }
                    }
                }
                "degree" => degree = Some(int(rest)?),
                "rows" => rows = Some(int(rest)?),
                "bc" => bc = Some(BcMode::parse(rest).ok_or_else(|| bad(format!("unknown bc mode {rest:?}")))?),
                "components" => components = Some(rest.to_string()),
                "meta" => {
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    meta.push((k.to_string(), v.to_string()));
                }
                "values" => {
                    let count = int(rest)?;
                    let mut vals = Vec::with_capacity(count);
                    for _ in 0..count {
                        let l = lines.next().ok_or_else(|| bad("truncated value list".into()))?;
                        vals.push(num(l.trim())?);
                    }
                    if lines.next() != Some("end") {
                        return Err(bad("missing end marker".into()));
                    }
                    values = Some(vals);
                    break;
                }
                other => return Err(bad(format!("unknown line {other:?}"))),
            }
        }
        let need = |what: &str| bad(format!("missing {what} line"));
        let snap = Snapshot {
            field: field.ok_or_else(|| need("field"))?,
            domain: domain.ok_or_else(|| need("domain"))?,
            geometry,
            shape: shape.ok_or_else(|| need("shape"))?,
            h: h.ok_or_else(|| need("h"))?,
            degree: degree.ok_or_else(|| need("degree"))?,
            rows: rows.ok_or_else(|| need("rows"))?,
            bc: bc.ok_or_else(|| need("bc"))?,
            meta,
            values: values.ok_or_else(|| need("values"))?,
        };
        if dim != Some(snap.dim()) {
            return Err(bad("dim does not match shape".into()));
        }
        let expected = snap.render()?;
        let listed =
            expected.lines().find(|l| l.starts_with("components ")).map(|l| l["components ".len()..].to_string());
        if components != listed {
            return Err(bad("component order differs from the canonical layout".into()));
        }
        let per_row = crate::exterior::binomial(snap.dim(), snap.degree) * snap.shape.iter().product::<usize>();
        if snap.values.len() != per_row * snap.rows {
            return Err(bad(format!("{} values, expected {}", snap.values.len(), per_row * snap.rows)));
        }
        Ok(snap)
    }

    /// Rebuilds the domain the field was stored on.
    pub fn domain_mask(&self) -> Result<Arc<DomainMask>> {
        Ok(Arc::new(make_domain(self.domain, &self.geometry, &self.shape, self.h)?))
    }

    fn check_mask(&self, mask: &DomainMask) -> Result<()> {
        if mask.shape() != self.shape.as_slice() || mask.h() != self.h {
            return Err(Error::Incompatible("snapshot does not match the mask".into()));
        }
        Ok(())
    }

    pub fn to_form(&self, mask: &Arc<DomainMask>) -> Result<FormField> {
        self.check_mask(mask)?;
        if self.field != FieldKind::Form {
            return Err(Error::Snapshot("snapshot holds a tensor".into()));
        }
        FormField::from_data(mask, self.degree, self.bc, self.values.clone())
    }

    pub fn to_tensor(&self, mask: &Arc<DomainMask>) -> Result<TensorField> {
        self.check_mask(mask)?;
        if self.field != FieldKind::Tensor {
            return Err(Error::Snapshot("snapshot holds a form".into()));
        }
        let per_row = self.values.len() / self.rows.max(1);
        let rows = self
            .values
            .chunks(per_row)
            .map(|c| FormField::from_data(mask, 1, self.bc, c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        TensorField::from_rows(rows)
    }
}
