//! Machine-readable results: deterministic JSON, CSV tables and the
//! pass/fail table of the verification suite.
//!
//! Floats are always written with 17 significant digits and object keys are
//! sorted, so identical inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Serializes `value` with sorted keys, two-space indentation and
/// 17-significant-digit floats. Non-finite floats become `null`.
pub fn to_json_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if x.is_finite() {
                    out.push_str(&fmt_f64(x));
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                indent(out, depth + 1);
                write_value(out, item, depth + 1);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let sorted: BTreeMap<&String, &Value> = map.iter().collect();
            out.push_str("{\n");
            let n = sorted.len();
            for (k, (key, item)) in sorted.into_iter().enumerate() {
                indent(out, depth + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, depth + 1);
                if k + 1 < n {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, depth);
            out.push('}');
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

/// A numeric result together with the bound it was checked against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    /// Human-readable relation, e.g. `"<="`, `">="`, `"in"`.
    pub relation: String,
    pub tolerance: f64,
    /// Upper end when `relation == "in"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance_hi: Option<f64>,
    pub passed: bool,
}

impl Measurement {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<=".into(),
            tolerance,
            tolerance_hi: None,
            passed: value <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: ">=".into(),
            tolerance,
            tolerance_hi: None,
            passed: value >= tolerance,
        }
    }

    pub fn greater_than(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: ">".into(),
            tolerance,
            tolerance_hi: None,
            passed: value > tolerance,
        }
    }

    pub fn less_than(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<".into(),
            tolerance,
            tolerance_hi: None,
            passed: value < tolerance,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "in".into(),
            tolerance: lo,
            tolerance_hi: Some(hi),
            passed: value >= lo && value <= hi,
        }
    }

    /// Integer-valued equality, e.g. an index count.
    pub fn equals(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "==".into(),
            tolerance: expected,
            tolerance_hi: None,
            passed: value == expected,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            relation: "==".into(),
            tolerance: 1.0,
            tolerance_hi: None,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub title: String,
    pub passed: bool,
    /// Wall time; kept out of the emitted files so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
    pub measurements: Vec<Measurement>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckRecord {
    pub fn new(id: impl Into<String>, title: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            passed: true,
            seconds: 0.0,
            measurements: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, m: Measurement) -> &mut Self {
        self.passed &= m.passed;
        self.measurements.push(m);
        self
    }

    pub fn note(&mut self, s: impl Into<String>) -> &mut Self {
        self.notes.push(s.into());
        self
    }

    /// Records a hard failure that prevented measuring anything.
    pub fn fail(&mut self, why: impl Into<String>) -> &mut Self {
        self.passed = false;
        self.notes.push(why.into());
        self
    }

    pub fn summary_line(&self) -> String {
        let worst = self
            .measurements
            .iter()
            .find(|m| !m.passed)
            .map(|m| format!(" (failed: {} = {} {} {})", m.name, fmt_short(m.value), m.relation, fmt_short(m.tolerance)))
            .unwrap_or_default();
        format!(
            "[{}] {:>3} {}{} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            worst,
            self.seconds
        )
    }
}

fn fmt_short(x: f64) -> String {
    format!("{x:.3e}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<CsvCell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CsvCell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| CsvCell::Num(x)).collect());
    }

    pub fn push(&mut self, row: Vec<CsvCell>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    CsvCell::Num(x) => fmt_f64(*x),
                    CsvCell::Int(i) => i.to_string(),
                    CsvCell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Everything a subcommand produces.
#[derive(Debug, Clone, Default)]
pub struct ReportBundle {
    pub json: BTreeMap<String, Value>,
    pub tables: BTreeMap<String, CsvTable>,
    pub checks: Vec<CheckRecord>,
}

impl ReportBundle {
    pub fn insert(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.json.insert(key.to_string(), v);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn json_value(&self) -> Value {
        let mut map = serde_json::Map::new();
        for (k, v) in &self.json {
            map.insert(k.clone(), v.clone());
        }
        if !self.checks.is_empty() {
            map.insert(
                "checks".into(),
                serde_json::to_value(&self.checks).unwrap_or(Value::Null),
            );
            map.insert("all_passed".into(), Value::Bool(self.all_passed()));
        }
        Value::Object(map)
    }

    pub fn check_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["id", "title", "passed"]);
        for c in &self.checks {
            t.push(vec![
                CsvCell::Text(c.id.clone()),
                CsvCell::Text(format!("\"{}\"", c.title.replace('"', "'"))),
                CsvCell::Text(if c.passed { "pass" } else { "fail" }.into()),
            ]);
        }
        t
    }
}

/// Writes `<stem>.json`, one `<stem>_<table>.csv` per table and, when there
/// are checks, `<stem>_checks.csv` into `dir`. Returns the written paths.
pub fn emit(report: &ReportBundle, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let io = |path: &Path, e: std::io::Error| Error::Io {
        context: format!("writing {}", path.display()),
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    let json_path = dir.join(format!("{stem}.json"));
    fs::write(&json_path, to_json_string(&report.json_value())).map_err(|e| io(&json_path, e))?;
    written.push(json_path);
    for (name, table) in &report.tables {
        let path = dir.join(format!("{stem}_{name}.csv"));
        fs::write(&path, table.render()).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    if !report.checks.is_empty() {
        let path = dir.join(format!("{stem}_checks.csv"));
        fs::write(&path, report.check_table().render()).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
        let x = std::f64::consts::PI;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn keys_are_sorted_and_floats_fixed() {
        let v = json!({"b": 1.5, "a": [1, 2.0], "c": {"z": null, "y": true}});
        let s = to_json_string(&v);
        let a = s.find("\"a\"").unwrap();
        let b = s.find("\"b\"").unwrap();
        assert!(a < b);
        assert!(s.contains("1.5000000000000000e0"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"], json!(1.5));
    }

    #[test]
    fn empty_report_is_valid_json() {
        let r = ReportBundle::default();
        let s = to_json_string(&r.json_value());
        assert_eq!(s, "{}\n");
        let _: Value = serde_json::from_str(&s).unwrap();
    }

    #[test]
    fn measurement_relations() {
        assert!(Measurement::at_most("x", 1.0, 1.0).passed);
        assert!(!Measurement::less_than("x", 1.0, 1.0).passed);
        assert!(Measurement::within("r", 4.1, 3.6, 4.4).passed);
        let mut c = CheckRecord::new("1", "t");
        c.push(Measurement::at_most("a", 2.0, 1.0));
        assert!(!c.passed);
        assert!(c.summary_line().starts_with("[FAIL]"));
    }
}
