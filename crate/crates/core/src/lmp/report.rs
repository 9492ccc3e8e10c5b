use std::fmt::Write as _;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One checked condition. The verdict is `Pass` iff `residual ≤ tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ReportEntry {
    pub fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        let verdict = if residual <= tolerance { Verdict::Pass } else { Verdict::Fail };
        ReportEntry { name: name.to_string(), residual, tolerance, verdict, value: None, note: None }
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// The certificate divided by `ν`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedSummary {
    pub alpha0: f64,
    pub lambda_l1: f64,
    pub eta_mass: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Largest trapezoidal dynamics defect, if it could be evaluated.
    pub dynamics_defect_max: Option<f64>,
    pub stationarity_l1: Option<f64>,
    pub nu: f64,
    pub normalized: Option<NormalizedSummary>,
    /// Atom nodes of `dη` that coincide with control jumps.
    pub convention_sensitive_nodes: Vec<usize>,
    pub h_max: f64,
    pub integral_scale: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub entries: Vec<ReportEntry>,
    pub diagnostics: Diagnostics,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(ReportEntry::passed)
    }

    pub fn entry(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.entries.iter().filter(|e| !e.passed()).map(|e| e.name.as_str()).collect()
    }

    /// Fixed-width table: condition | residual | threshold | verdict.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} | {:>12} | {:>12} | {:<7}", "condition", "residual", "threshold", "verdict");
        let _ = writeln!(out, "{:-<16}-+-{:-<12}-+-{:-<12}-+-{:-<7}", "", "", "", "");
        for e in &self.entries {
            let verdict = match e.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
            };
            let _ = writeln!(
                out,
                "{:<16} | {:>12} | {:>12} | {:<7}",
                e.name,
                sci(e.residual),
                sci(e.tolerance),
                verdict
            );
        }
        let d = &self.diagnostics;
        let _ = writeln!(out);
        let _ = writeln!(out, "nu = {}", sci(d.nu));
        if let Some(n) = &d.normalized {
            let _ = writeln!(
                out,
                "normalized: alpha0 = {}, |lambda|_1 = {}, eta mass = {}",
                sci(n.alpha0),
                sci(n.lambda_l1),
                sci(n.eta_mass)
            );
        }
        if let Some(v) = d.dynamics_defect_max {
            let _ = writeln!(out, "max dynamics defect = {}", sci(v));
        }
        if let Some(v) = d.stationarity_l1 {
            let _ = writeln!(out, "stationarity L1 = {}", sci(v));
        }
        if !d.convention_sensitive_nodes.is_empty() {
            let _ = writeln!(out, "convention-sensitive nodes: {:?}", d.convention_sensitive_nodes);
        }
        for e in self.entries.iter().filter(|e| e.note.is_some()) {
            let _ = writeln!(out, "{}: {}", e.name, e.note.as_deref().unwrap_or_default());
        }
        for n in &d.notes {
            let _ = writeln!(out, "note: {n}");
        }
        let _ = writeln!(out, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{:.3e}", v + 0.0)
    } else {
        format!("{v}")
    }
}
