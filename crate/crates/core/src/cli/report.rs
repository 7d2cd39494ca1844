//! Run reports and their CSV/JSON renderings.
//!
//! CSV layout (format version 1): `#`-prefixed header lines carrying the
//! command, tool version and config echo, then one table with the fixed
//! column set of the command, then `#`-prefixed summary lines (check
//! counts, worst ratios, constants, counterexample paths, warnings and,
//! outside deterministic mode, timings). The JSON rendering holds the same
//! data with `columns` and `rows` as arrays.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use super::config::{ExperimentConfig, Format};
use crate::analysis::ConstantsRecord;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Empty,
    Text(String),
    Int(u64),
    Float(f64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_float(*x),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Empty => Value::Null,
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) if x.is_finite() => Value::from(*x),
            Cell::Float(x) => Value::String(fmt_float(*x)),
            Cell::Bool(b) => Value::Bool(*b),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(o: Option<T>) -> Self {
        o.map_or(Cell::Empty, Into::into)
    }
}

/// Shortest representation that reads back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq, Eq)]
pub struct CheckCounts {
    pub executed: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub constants: Vec<ConstantsRecord>,
    pub checks: CheckCounts,
    pub worst_ratios: BTreeMap<String, f64>,
    pub counterexamples: Vec<String>,
    pub warnings: Vec<String>,
    /// Solver runs that stopped without meeting their tolerance.
    pub numerical_failures: Vec<String>,
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &'static str, config: &ExperimentConfig, columns: &[&'static str]) -> Self {
        Self {
            command,
            config: config.clone(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            constants: Vec::new(),
            checks: CheckCounts::default(),
            worst_ratios: BTreeMap::new(),
            counterexamples: Vec::new(),
            warnings: Vec::new(),
            numerical_failures: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the {} table", self.command);
        self.rows.push(row);
    }

    pub fn record_check(&mut self, passed: bool) {
        self.checks.executed += 1;
        if passed {
            self.checks.passed += 1;
        } else {
            self.checks.failed += 1;
        }
    }

    /// Keeps the maximum per key; NaN never replaces a number.
    pub fn worst(&mut self, key: &str, ratio: f64) {
        let e = self.worst_ratios.entry(key.to_string()).or_insert(ratio);
        if ratio > *e || e.is_nan() {
            *e = ratio;
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.checks.failed > 0 {
            1
        } else if !self.numerical_failures.is_empty() {
            3
        } else {
            0
        }
    }

    fn include_timings(&self) -> bool {
        !self.config.deterministic_sum && !self.timings.is_empty()
    }

    fn config_echo(&self) -> Value {
        serde_json::to_value(&self.config).expect("config serializes")
    }

    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert("format_version".into(), Value::from(FORMAT_VERSION));
        obj.insert("tool_version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        obj.insert("command".into(), Value::from(self.command));
        obj.insert("config".into(), self.config_echo());
        obj.insert("columns".into(), Value::from(self.columns.clone()));
        obj.insert(
            "rows".into(),
            Value::Array(self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect()),
        );
        obj.insert("checks".into(), serde_json::to_value(self.checks).unwrap());
        obj.insert(
            "worst_ratios".into(),
            Value::Object(self.worst_ratios.iter().map(|(k, v)| (k.clone(), Cell::Float(*v).json())).collect()),
        );
        obj.insert("constants".into(), serde_json::to_value(&self.constants).unwrap());
        obj.insert("counterexamples".into(), Value::from(self.counterexamples.clone()));
        obj.insert("warnings".into(), Value::from(self.warnings.clone()));
        obj.insert("numerical_failures".into(), Value::from(self.numerical_failures.clone()));
        if self.include_timings() {
            obj.insert(
                "timings".into(),
                Value::Object(self.timings.iter().map(|(k, v)| (k.clone(), Value::from(*v))).collect()),
            );
        }
        Value::Object(obj)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# ndkorn report v{FORMAT_VERSION}\n"));
        out.push_str(&format!("# tool_version {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("# command {}\n", self.command));
        if let Value::Object(cfg) = self.config_echo() {
            for (k, v) in cfg {
                out.push_str(&format!("# config {k} {v}\n"));
            }
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 table"));
        let c = self.checks;
        out.push_str(&format!("# checks executed={} passed={} failed={}\n", c.executed, c.passed, c.failed));
        for (k, v) in &self.worst_ratios {
            out.push_str(&format!("# worst {k} {}\n", fmt_float(*v)));
        }
        for rec in &self.constants {
            out.push_str(&format!("# constants {}\n", serde_json::to_string(rec).unwrap()));
        }
        for p in &self.counterexamples {
            out.push_str(&format!("# counterexample {p}\n"));
        }
        for w in &self.warnings {
            out.push_str(&format!("# warning {w}\n"));
        }
        for f in &self.numerical_failures {
            out.push_str(&format!("# numerical_failure {f}\n"));
        }
        if self.include_timings() {
            for (k, v) in &self.timings {
                out.push_str(&format!("# timing {k} {v:.3}\n"));
            }
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).unwrap();
                s.push('\n');
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        let mut r = RunReport::new("korn", &ExperimentConfig::default(), &["a", "b", "c"]);
        r.push_row(vec![Cell::from("x,y"), Cell::from(0.1), Cell::Empty]);
        r.push_row(vec![Cell::from(3usize), Cell::from(f64::NAN), Cell::from(true)]);
        r.record_check(true);
        r.record_check(false);
        r.worst("ratio", 0.5);
        r.worst("ratio", f64::NAN);
        r.worst("ratio", 0.7);
        r.timings.insert("total".into(), 1.25);
        r
    }

    #[test]
    fn csv_table_and_summary() {
        let r = sample();
        let s = r.to_csv();
        assert!(s.contains("a,b,c\n\"x,y\",0.1,\n3,nan,true\n"));
        assert!(s.contains("# checks executed=2 passed=1 failed=1\n"));
        assert!(s.contains("# worst ratio 0.7\n"));
        assert!(s.contains("# timing total 1.250\n"));
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn json_mirrors_csv() {
        let j = sample().to_json();
        assert_eq!(j["columns"], serde_json::json!(["a", "b", "c"]));
        assert_eq!(j["rows"][0], serde_json::json!(["x,y", 0.1, null]));
        assert_eq!(j["rows"][1][1], serde_json::json!("nan"));
        assert_eq!(j["checks"]["failed"], 1);
        assert_eq!(j["config"]["dim"], 2);
    }

    #[test]
    fn deterministic_mode_drops_timings() {
        let mut r = sample();
        r.config.deterministic_sum = true;
        assert!(!r.to_csv().contains("# timing"));
        assert!(r.to_json().get("timings").is_none());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 2.5e17, -0.0] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
