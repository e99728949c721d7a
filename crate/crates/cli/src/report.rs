//! Run reports: named checks, measurements and their JSON form.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Serialize, Serializer};
use shrinklab_core::mesh::raw_float;

pub const SCHEMA_ID: &str = "shrinklab/run-report/v1";
pub const SCHEMA: &str = include_str!("../schemas/run_report.v1.json");

/// Float written with 17 significant digits, `null` when not finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Float(pub f64);

impl Serialize for Float {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        raw_float(self.0).serialize(s)
    }
}

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.0;
        if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) {
            write!(f, "{x:.6e}")
        } else {
            write!(f, "{x:.10}")
        }
    }
}

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Exact value known in closed form.
    ClosedForm,
    /// Value computed a second, independent way.
    Derived,
    /// Inequality or structural property that must hold.
    Invariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `|value - expected| <= tolerance`.
    Abs,
    /// `|value - expected| <= tolerance * |expected|`.
    Rel,
    /// `value <= expected + tolerance`.
    AtMost,
    /// `value >= expected - tolerance`.
    AtLeast,
    /// `value` is 1 for true.
    Holds,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub value: Option<Float>,
    pub expected: Option<Float>,
    pub tolerance: Option<Float>,
    pub source: Source,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: &str, relation: Relation, value: f64, expected: f64, tolerance: f64, source: Source) -> Self {
        let mut c = Check {
            name: name.to_string(),
            relation,
            value: Some(Float(value)),
            expected: Some(Float(expected)),
            tolerance: Some(Float(tolerance)),
            source,
            pass: false,
            note: None,
        };
        c.evaluate();
        c
    }

    pub fn abs(name: &str, value: f64, expected: f64, tol: f64, source: Source) -> Self {
        Self::new(name, Relation::Abs, value, expected, tol, source)
    }

    pub fn rel(name: &str, value: f64, expected: f64, tol: f64, source: Source) -> Self {
        Self::new(name, Relation::Rel, value, expected, tol, source)
    }

    pub fn at_most(name: &str, value: f64, bound: f64, slack: f64) -> Self {
        Self::new(name, Relation::AtMost, value, bound, slack, Source::Invariant)
    }

    pub fn at_least(name: &str, value: f64, bound: f64, slack: f64) -> Self {
        Self::new(name, Relation::AtLeast, value, bound, slack, Source::Invariant)
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Check {
            name: name.to_string(),
            relation: Relation::Holds,
            value: Some(Float(if ok { 1.0 } else { 0.0 })),
            expected: Some(Float(1.0)),
            tolerance: None,
            source: Source::Invariant,
            pass: ok,
            note: None,
        }
    }

    /// A check whose value could not be computed.
    pub fn failed(name: &str, why: impl fmt::Display) -> Self {
        Check {
            name: name.to_string(),
            relation: Relation::Holds,
            value: None,
            expected: None,
            tolerance: None,
            source: Source::Invariant,
            pass: false,
            note: Some(why.to_string()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn evaluate(&mut self) {
        let (Some(v), Some(e)) = (self.value, self.expected) else {
            self.pass = false;
            return;
        };
        let (v, e) = (v.0, e.0);
        let t = self.tolerance.map_or(0.0, |t| t.0);
        self.pass = v.is_finite()
            && match self.relation {
                Relation::Abs => (v - e).abs() <= t,
                Relation::Rel => (v - e).abs() <= t * e.abs(),
                Relation::AtMost => v <= e + t,
                Relation::AtLeast => v >= e - t,
                Relation::Holds => v == 1.0,
            };
    }

    /// Replaces the tolerance of a value comparison.
    pub fn override_tolerance(&mut self, tol: f64) {
        if matches!(self.relation, Relation::Abs | Relation::Rel) && self.value.is_some() {
            self.tolerance = Some(Float(tol));
            self.evaluate();
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: Option<Float>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub command: String,
    pub fixture: Option<String>,
    pub mesh: Option<String>,
    pub resolution: usize,
    pub count: usize,
    pub tol: Option<Float>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub subject: String,
    pub config: ConfigEcho,
    pub checks: Vec<Check>,
    pub measurements: Vec<Measurement>,
    pub pass: bool,
}

impl RunReport {
    pub fn new(subject: &str, config: ConfigEcho) -> Self {
        RunReport {
            schema: SCHEMA_ID,
            tool: "shrinklab",
            version: env!("CARGO_PKG_VERSION"),
            subject: subject.to_string(),
            config,
            checks: Vec::new(),
            measurements: Vec::new(),
            pass: true,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn measure(&mut self, name: &str, value: f64) {
        self.measurements.push(Measurement {
            name: name.to_string(),
            value: Some(Float(value)),
        });
    }

    /// Applies `--tol` and settles the overall verdict.
    pub fn finish(&mut self, tol: Option<f64>) {
        if let Some(t) = tol {
            for c in &mut self.checks {
                c.override_tolerance(t);
            }
        }
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            let value = c.value.map_or("n/a".to_string(), |v| v.to_string());
            let target = match (c.relation, c.expected, c.tolerance) {
                (Relation::Holds, _, _) => String::new(),
                (r, Some(e), t) => {
                    let op = match r {
                        Relation::Abs | Relation::Rel => "≈",
                        Relation::AtMost => "≤",
                        _ => "≥",
                    };
                    let t = match t {
                        Some(t) if t.0 > 0.0 => format!(" (tol {:.1e})", t.0),
                        _ => String::new(),
                    };
                    format!(" {op} {e}{t}")
                }
                _ => String::new(),
            };
            out.push_str(&format!("{verdict}  {}: {value}{target}", c.name));
            if let Some(n) = &c.note {
                out.push_str(&format!("  [{n}]"));
            }
            out.push('\n');
        }
        for m in &self.measurements {
            let value = m.value.map_or("n/a".to_string(), |v| v.to_string());
            out.push_str(&format!("      {}: {value}\n", m.name));
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        out.push_str(&format!(
            "{}: {passed}/{} checks passed on {}\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.subject
        ));
        out
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo() -> ConfigEcho {
        ConfigEcho {
            command: "verify".into(),
            fixture: Some("sphere2".into()),
            mesh: None,
            resolution: 8,
            count: 4,
            tol: None,
            seed: 0,
        }
    }

    #[test]
    fn relations_evaluate() {
        assert!(Check::abs("a", 1.0, 1.05, 0.1, Source::ClosedForm).pass);
        assert!(!Check::abs("a", 1.0, 1.2, 0.1, Source::ClosedForm).pass);
        assert!(Check::rel("r", 101.0, 100.0, 0.02, Source::Derived).pass);
        assert!(!Check::rel("r", 103.0, 100.0, 0.02, Source::Derived).pass);
        assert!(Check::at_most("m", 0.5, 0.499, 1e-3).pass);
        assert!(!Check::at_least("l", 0.4, 0.5, 0.0).pass);
        assert!(!Check::abs("nan", f64::NAN, 0.0, 1.0, Source::ClosedForm).pass);
        assert!(!Check::failed("x", "no value").pass);
    }

    #[test]
    fn tol_override_touches_value_comparisons_only() {
        let mut r = RunReport::new("s", echo());
        r.check(Check::abs("a", 1.0, 1.0 + 1e-9, 1e-6, Source::ClosedForm));
        r.check(Check::at_most("m", 0.49, 0.5, 0.0));
        r.finish(None);
        assert!(r.pass);
        r.finish(Some(1e-12));
        assert!(!r.checks[0].pass);
        assert!(r.checks[1].pass);
        assert_eq!(r.checks[1].tolerance, Some(Float(0.0)));
        assert!(!r.pass);
    }

    #[test]
    fn json_uses_seventeen_digits_and_null() {
        let mut r = RunReport::new("s", echo());
        r.measure("third", 1.0 / 3.0);
        r.measure("inf", f64::INFINITY);
        let json = r.to_json();
        assert!(json.contains("3.3333333333333331e-1"));
        assert!(json.contains("\"value\": null"));
        assert!(json.ends_with("}\n"));
    }

    #[test]
    fn summary_counts_checks() {
        let mut r = RunReport::new("sphere2", echo());
        r.check(Check::holds("h", true));
        r.check(Check::holds("g", false));
        r.finish(None);
        let s = r.summary();
        assert!(s.contains("FAIL  g"));
        assert!(s.ends_with("FAIL: 1/2 checks passed on sphere2\n"));
    }
}
