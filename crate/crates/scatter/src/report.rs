//! Run reports and their JSON and text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use halfline::levinson::WindingReport;
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `measured < tolerance`
    Below,
    /// `measured == tolerance`
    Equal,
}

/// One asserted tolerance with its measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn below(name: &str, measured: f64, tolerance: f64) -> Self {
        Check { name: name.to_string(), measured, tolerance, relation: Relation::Below, pass: measured < tolerance }
    }

    pub fn equal(name: &str, measured: f64, expected: f64) -> Self {
        Check { name: name.to_string(), measured, tolerance: expected, relation: Relation::Equal, pass: measured == expected }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub name: String,
    pub status: Status,
    /// Set when the task could not run: numerical breakdown or a failed
    /// prerequisite.
    pub error: Option<String>,
    pub checks: Vec<Check>,
    /// Measured quantities that carry no tolerance.
    pub values: BTreeMap<String, f64>,
    /// Artifact file names, relative to the output directory.
    pub artifacts: Vec<String>,
}

impl TaskReport {
    pub fn new(name: &str) -> Self {
        TaskReport {
            name: name.to_string(),
            status: Status::Pass,
            error: None,
            checks: Vec::new(),
            values: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn skipped(name: &str, reason: impl Into<String>) -> Self {
        TaskReport { status: Status::Skipped, error: Some(reason.into()), ..TaskReport::new(name) }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn value(&mut self, name: &str, v: f64) {
        self.values.insert(name.to_string(), v);
    }

    /// Pass iff every check passes.
    pub fn finish(mut self) -> Self {
        if self.status != Status::Skipped {
            self.status = if self.checks.iter().all(|c| c.pass) { Status::Pass } else { Status::Fail };
        }
        self
    }
}

/// Wall-clock data, kept apart so the rest of the report is reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub seconds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub config: RunConfig,
    pub potential: String,
    /// Discretization error calibrated by the waveop task.
    pub eps_disc: Option<f64>,
    pub bound_states: Option<usize>,
    pub winding: Option<WindingReport>,
    pub tasks: Vec<TaskReport>,
    /// Set when a task broke down numerically.
    pub breakdown: bool,
    pub meta: Meta,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.tasks.iter().all(|t| t.status != Status::Fail) && !self.breakdown
    }

    /// 0 pass, 2 tolerance failure, 4 numerical breakdown.
    pub fn exit_code(&self) -> i32 {
        if self.breakdown {
            4
        } else if self.tasks.iter().any(|t| t.status == Status::Fail) {
            2
        } else {
            0
        }
    }

    pub fn task(&self, name: &str) -> Option<&TaskReport> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Text => self.to_text(),
        }
    }

    /// Deterministic summary: status matrix, every check, and the four
    /// Levinson edge windings. No timing.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "potential  {}", self.potential);
        let _ = writeln!(s, "config     {}", self.config_hash);
        if let Some(e) = self.eps_disc {
            let _ = writeln!(s, "eps_disc   {e:.3e}");
        }
        if let Some(n) = self.bound_states {
            let _ = writeln!(s, "N          {n}");
        }
        let _ = writeln!(s);
        for t in &self.tasks {
            let _ = writeln!(s, "{:<10} {}", t.name, t.status.as_str());
        }
        for t in &self.tasks {
            if t.status == Status::Skipped && t.checks.is_empty() {
                continue;
            }
            let _ = writeln!(s, "\n[{}]", t.name);
            if let Some(e) = &t.error {
                let _ = writeln!(s, "  error: {e}");
            }
            for c in &t.checks {
                let rel = match c.relation {
                    Relation::Below => "<",
                    Relation::Equal => "==",
                };
                let verdict = if c.pass { "pass" } else { "FAIL" };
                let _ = writeln!(s, "  {:<28} {:>11.3e} {:<2} {:<10.3e} {}", c.name, c.measured, rel, c.tolerance, verdict);
            }
            for (k, v) in &t.values {
                let _ = writeln!(s, "  {k:<28} {v:>11.6e}");
            }
            if t.name == "levinson" {
                if let Some(w) = &self.winding {
                    for (i, wn) in [w.wn1, w.wn2, w.wn3, w.wn4].iter().enumerate() {
                        let _ = writeln!(s, "  wn(Γ{}) = {:+.6}", i + 1, wn);
                    }
                    let _ = writeln!(s, "  total  = {:+.6}  N = {}", w.total, w.expected_index);
                }
            }
        }
        let _ = writeln!(s, "\noverall    {}", if self.passed() { "pass" } else { "fail" });
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finish_sets_status_from_checks() {
        let mut t = TaskReport::new("x");
        t.check(Check::below("a", 1.0, 2.0));
        assert_eq!(t.clone().finish().status, Status::Pass);
        t.check(Check::equal("b", 1.0, 2.0));
        assert_eq!(t.finish().status, Status::Fail);
        assert_eq!(TaskReport::skipped("y", "not requested").finish().status, Status::Skipped);
    }

    #[test]
    fn nan_never_passes() {
        assert!(!Check::below("nan", f64::NAN, 1.0).pass);
    }
}
