//! Experiment configuration: a TOML file with `[domain]`, `[run]`,
//! `[tolerances]` and `[output]` sections, overridden by command-line
//! flags. Every key is optional.
//!
//! ```toml
//! [domain]
//! kinds = ["box"]            # box, ball, annulus, shell, solid_torus
//! dim = 2
//! resolutions = [17, 33, 65] # vertices per axis, h = 1/(n-1)
//!
//! [domain.geometry]          # physical units, unit bounding box
//! radius = 0.5
//! inner_radius = 0.25
//!
//! [run]
//! bc_mode = "full"           # full | tangential
//! seeds = "0..100"           # or a list such as [0, 1, 2]
//! families = ["general"]     # general, compatible, skew
//! sharp = true               # compute c_sharp in verify/convergence
//! deterministic_sum = false
//!
//! [tolerances]
//! cg_tol = 1e-12
//! eig_tol = 1e-10
//! chain_tol = 1e-8
//!
//! [output]
//! format = "csv"             # csv | json
//! out = "report.csv"         # stdout when absent
//! dump_dir = "counterexamples"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Family;
use crate::domain::{BcMode, DomainKind, Geometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub domains: Vec<DomainKind>,
    pub dim: usize,
    pub resolutions: Vec<usize>,
    pub geometry: Geometry,
    pub bc_mode: BcMode,
    pub seeds: Vec<u64>,
    pub families: Vec<Family>,
    pub sharp: bool,
    pub deterministic_sum: bool,
    pub cg_tol: f64,
    pub eig_tol: f64,
    pub chain_tol: f64,
    pub format: Format,
    /// Where the report goes; not echoed, so the same experiment written
    /// to two files gives identical reports.
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub dump_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domains: vec![DomainKind::Box],
            dim: 2,
            resolutions: vec![17],
            geometry: Geometry::default(),
            bc_mode: BcMode::FullDirichlet,
            seeds: (0..10).collect(),
            families: vec![Family::General],
            sharp: true,
            deterministic_sum: false,
            cg_tol: 1e-12,
            eig_tol: 1e-10,
            chain_tol: 1e-8,
            format: Format::Csv,
            out: None,
            dump_dir: PathBuf::from("counterexamples"),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    domain: DomainSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    tolerances: ToleranceSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSection {
    kinds: Option<Vec<String>>,
    dim: Option<usize>,
    resolutions: Option<Vec<usize>>,
    geometry: Option<Geometry>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SeedSpec {
    List(Vec<u64>),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    bc_mode: Option<String>,
    seeds: Option<SeedSpec>,
    families: Option<Vec<String>>,
    sharp: Option<bool>,
    deterministic_sum: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceSection {
    cg_tol: Option<f64>,
    eig_tol: Option<f64>,
    chain_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    format: Option<String>,
    out: Option<PathBuf>,
    dump_dir: Option<PathBuf>,
}

/// Command-line overrides, already split into raw strings.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub domains: Option<String>,
    pub dim: Option<usize>,
    pub resolutions: Option<String>,
    pub seeds: Option<String>,
    pub families: Option<String>,
    pub bc_mode: Option<String>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    pub dump_dir: Option<PathBuf>,
    pub deterministic_sum: bool,
    pub no_sharp: bool,
}

/// `"0..100"`, `"0..=9"` or `"1,2,5"`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("invalid seed `{}`", t.trim()));
    if let Some((a, b)) = s.split_once("..=") {
        let (a, b) = (num(a)?, num(b)?);
        return if a <= b { Ok((a..=b).collect()) } else { Err(format!("empty seed range `{s}`")) };
    }
    if let Some((a, b)) = s.split_once("..") {
        return Ok((num(a)?..num(b)?).collect());
    }
    s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect()
}

fn parse_list<T>(s: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse(t).ok_or_else(|| format!("unknown {what} `{t}`")))
        .collect()
}

fn parse_resolutions(s: &str) -> Result<Vec<usize>, String> {
    parse_list(s, "resolution", |t| t.parse().ok())
}

fn parse_bc(s: &str) -> Result<BcMode, String> {
    match BcMode::parse(s) {
        Some(BcMode::None) | None => Err(format!("bc mode `{s}` is not one of full, tangential")),
        Some(m) => Ok(m),
    }
}

impl ExperimentConfig {
    /// Reads `path` (if any), applies the overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, String> {
        let file: FileConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
                toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let mut cfg = ExperimentConfig::default();

        if let Some(k) = &file.domain.kinds {
            cfg.domains = parse_list(&k.join(","), "domain", DomainKind::parse)?;
        }
        if let Some(d) = file.domain.dim {
            cfg.dim = d;
        }
        if let Some(r) = file.domain.resolutions {
            cfg.resolutions = r;
        }
        if let Some(g) = file.domain.geometry {
            cfg.geometry = g;
        }
        if let Some(m) = &file.run.bc_mode {
            cfg.bc_mode = parse_bc(m)?;
        }
        match file.run.seeds {
            Some(SeedSpec::List(v)) => cfg.seeds = v,
            Some(SeedSpec::Text(t)) => cfg.seeds = parse_seeds(&t)?,
            None => {}
        }
        if let Some(f) = &file.run.families {
            cfg.families = parse_list(&f.join(","), "family", Family::parse)?;
        }
        if let Some(s) = file.run.sharp {
            cfg.sharp = s;
        }
        if let Some(d) = file.run.deterministic_sum {
            cfg.deterministic_sum = d;
        }
        if let Some(t) = file.tolerances.cg_tol {
            cfg.cg_tol = t;
        }
        if let Some(t) = file.tolerances.eig_tol {
            cfg.eig_tol = t;
        }
        if let Some(t) = file.tolerances.chain_tol {
            cfg.chain_tol = t;
        }
        if let Some(f) = &file.output.format {
            cfg.format = Format::parse(f).ok_or_else(|| format!("unknown format `{f}`"))?;
        }
        if let Some(o) = file.output.out {
            cfg.out = Some(o);
        }
        if let Some(d) = file.output.dump_dir {
            cfg.dump_dir = d;
        }

        let o = overrides;
        if let Some(s) = &o.domains {
            cfg.domains = parse_list(s, "domain", DomainKind::parse)?;
        }
        if let Some(d) = o.dim {
            cfg.dim = d;
        }
        if let Some(s) = &o.resolutions {
            cfg.resolutions = parse_resolutions(s)?;
        }
        if let Some(s) = &o.seeds {
            cfg.seeds = parse_seeds(s)?;
        }
        if let Some(s) = &o.families {
            cfg.families = parse_list(s, "family", Family::parse)?;
        }
        if let Some(s) = &o.bc_mode {
            cfg.bc_mode = parse_bc(s)?;
        }
        if let Some(s) = &o.format {
            cfg.format = Format::parse(s).ok_or_else(|| format!("unknown format `{s}`"))?;
        }
        if let Some(p) = &o.out {
            cfg.out = Some(p.clone());
        }
        if let Some(p) = &o.dump_dir {
            cfg.dump_dir = p.clone();
        }
        cfg.deterministic_sum |= o.deterministic_sum;
        cfg.sharp &= !o.no_sharp;

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.domains.is_empty() {
            return Err("no domain selected".into());
        }
        if self.dim == 0 {
            return Err("dimension must be at least 1".into());
        }
        if self.resolutions.is_empty() {
            return Err("no resolution selected".into());
        }
        if let Some(&n) = self.resolutions.iter().find(|&&n| n < 3) {
            return Err(format!("resolution {n} below 3"));
        }
        if self.resolutions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("resolutions {:?} are not strictly increasing", self.resolutions));
        }
        if self.seeds.is_empty() {
            return Err("at least one seed is required".into());
        }
        if self.families.is_empty() {
            return Err("at least one tensor family is required".into());
        }
        for (name, t) in [("cg_tol", self.cg_tol), ("eig_tol", self.eig_tol), ("chain_tol", self.chain_tol)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(format!("{name} must be positive, got {t}"));
            }
        }
        Ok(())
    }
}
