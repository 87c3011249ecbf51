//! Run artifacts: CSV tables, a text summary and `verdict.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// A checked inequality `value <= limit` or `value >= limit`.
#[derive(Debug, Clone, Serialize)]
pub struct Invariant {
    pub name: String,
    pub value: f64,
    pub sense: Sense,
    pub limit: f64,
    pub passed: bool,
}

impl Invariant {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Invariant {
            name: name.to_string(),
            value,
            sense: Sense::AtMost,
            limit,
            passed: value <= limit,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Invariant {
            name: name.to_string(),
            value,
            sense: Sense::AtLeast,
            limit,
            passed: value >= limit,
        }
    }

    /// A yes/no condition recorded as `1 >= 1`.
    pub fn flag(name: &str, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    /// Signed distance to the limit; negative means violated.
    pub fn margin(&self) -> f64 {
        match self.sense {
            Sense::AtMost => self.limit - self.value,
            Sense::AtLeast => self.value - self.limit,
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Table {
            name: name.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, command: Command, seed: u64) -> String {
        let mut out = format!("# fracvi {command} seed={seed}\n");
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: Command,
    pub seed: u64,
    pub invariants: Vec<Invariant>,
    /// Informational `key = value` lines for the summary.
    pub facts: Vec<(String, String)>,
    pub tables: Vec<Table>,
    /// Set when a solver or precondition error cut the run short.
    pub failure: Option<String>,
}

#[derive(Serialize)]
struct Verdict<'a> {
    command: String,
    seed: u64,
    passed: bool,
    failure: Option<&'a str>,
    invariants: &'a [Invariant],
}

impl Report {
    pub fn new(command: Command, seed: u64) -> Self {
        Report {
            command,
            seed,
            invariants: Vec::new(),
            facts: Vec::new(),
            tables: Vec::new(),
            failure: None,
        }
    }

    pub fn check(&mut self, inv: Invariant) {
        self.invariants.push(inv);
    }

    pub fn fact(&mut self, key: &str, value: impl ToString) {
        self.facts.push((key.to_string(), value.to_string()));
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.invariants.iter().all(|i| i.passed)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "seed = {}", self.seed);
        for (k, v) in &self.facts {
            let _ = writeln!(s, "{k} = {v}");
        }
        if let Some(f) = &self.failure {
            let _ = writeln!(s, "failure = {f}");
        }
        for inv in &self.invariants {
            let op = match inv.sense {
                Sense::AtMost => "<=",
                Sense::AtLeast => ">=",
            };
            let _ = writeln!(s, "\n[invariant.{}]", inv.name);
            let _ = writeln!(s, "value = {}", float(inv.value));
            let _ = writeln!(s, "limit = {op} {}", float(inv.limit));
            let _ = writeln!(s, "margin = {}", float(inv.margin()));
            let _ = writeln!(s, "status = {}", if inv.passed { "pass" } else { "FAIL" });
        }
        let _ = writeln!(s, "\n[verdict]");
        let _ = writeln!(s, "passed = {}", self.passed());
        s
    }

    pub fn verdict_json(&self) -> String {
        let v = Verdict {
            command: self.command.to_string(),
            seed: self.seed,
            passed: self.passed(),
            failure: self.failure.as_deref(),
            invariants: &self.invariants,
        };
        let mut s = serde_json::to_string_pretty(&v).expect("verdict serializes");
        s.push('\n');
        s
    }

    /// Writes every table, `summary.txt` and `verdict.json` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            fs::write(&p, t.render(self.command, self.seed))?;
            written.push(p);
        }
        let p = dir.join("summary.txt");
        fs::write(&p, self.summary())?;
        written.push(p);
        let p = dir.join("verdict.json");
        fs::write(&p, self.verdict_json())?;
        written.push(p);
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(-2.0), "-2.0000000000000000e0");
        assert_eq!(0.1f64, float(0.1).parse::<f64>().unwrap());
    }

    #[test]
    fn invariant_margins() {
        let a = Invariant::at_most("x", 0.5, 1.0);
        assert!(a.passed && a.margin() == 0.5);
        let b = Invariant::at_least("y", -0.25, 0.0);
        assert!(!b.passed && b.margin() == -0.25);
        assert!(Invariant::flag("z", true).passed);
        assert!(!Invariant::flag("z", false).passed);
    }

    #[test]
    fn table_rendering_uses_lf_and_seed_header() {
        let mut t = Table::new("demo", &["k", "v"]);
        t.push(vec!["0".into(), float(1.0)]);
        let text = t.render(Command::Evolve, 42);
        assert_eq!(text, "# fracvi evolve seed=42\nk,v\n0,1.0000000000000000e0\n");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn verdict_reflects_failures() {
        let mut r = Report::new(Command::Suite, 1);
        r.check(Invariant::at_most("a", 0.0, 1.0));
        assert!(r.passed());
        r.failure = Some("boom".into());
        assert!(!r.passed());
        let v: serde_json::Value = serde_json::from_str(&r.verdict_json()).unwrap();
        assert_eq!(v["passed"], false);
        assert_eq!(v["invariants"][0]["sense"], "<=");
    }
}
