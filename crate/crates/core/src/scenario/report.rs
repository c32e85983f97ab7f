use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Mode;
use crate::error::{Error, Result};
use crate::lethargy::{BorodinReport, StepKind, SubspaceConditionReport};

pub const EXIT_CODES: &str = "exit codes: 0 pass, 1 fail, 2 input error, 3 solver failure";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    InputError,
    SolverFailure,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::InputError => 2,
            Verdict::SolverFailure => 3,
        }
    }

    pub fn from_error(e: &Error) -> Verdict {
        match e {
            Error::ConditionFails => Verdict::Fail,
            e if e.is_input_error() => Verdict::InputError,
            _ => Verdict::SolverFailure,
        }
    }

    /// The more severe of two verdicts.
    pub fn worst(self, other: Verdict) -> Verdict {
        let rank = |v: Verdict| match v {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::SolverFailure => 2,
            Verdict::InputError => 3,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }

    fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::InputError => "INPUT ERROR",
            Verdict::SolverFailure => "SOLVER FAILURE",
        }
    }
}

/// One re-measured level: `ρ(x, Y_k)` against `d_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub k: usize,
    pub target: f64,
    pub achieved: f64,
    pub residual: f64,
    /// Duality gap reported by the distance solver.
    pub certificate_gap: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub k: usize,
    pub lambda: f64,
    pub kind: StepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loose_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Reported but not part of the verdict.
    pub advisory: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixRow {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stabilization {
    pub prefixes: Vec<PrefixRow>,
    /// `differences[N−1][M−1] = ‖x_N − x_M‖`.
    pub differences: Vec<Vec<Option<f64>>>,
    /// `max_{M>N} ‖x_N − x_M‖`.
    pub sup_tail: Vec<Option<f64>>,
    pub non_increasing: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub mode: Mode,
    pub norm: String,
    pub ambient_dim: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub verdict: Verdict,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub borodin: Option<BorodinReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace_condition: Option<SubspaceConditionReport>,
    pub levels: Vec<LevelRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_norm: Option<f64>,
    pub coefficients: Vec<CoefficientRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stabilization: Option<Stabilization>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
    pub errors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports hold only finite numbers")
    }

    pub fn from_json(text: &str) -> Result<Report> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(format!("report: {e}")))
    }

    /// Level index of the first failing row.
    pub fn first_failing_level(&self) -> Option<usize> {
        self.levels.iter().find(|r| !r.ok).map(|r| r.k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Text => text(report),
    }
}

fn text(r: &Report) -> String {
    let mut s = String::new();
    let mode = serde_json::to_value(r.mode).ok();
    let mode = mode.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
    let _ = writeln!(
        s,
        "scenario {}  mode {}  norm {}  dim {}  tol {:e}  seed {}",
        r.scenario, mode, r.norm, r.ambient_dim, r.tolerance, r.seed
    );
    let _ = writeln!(s, "verdict  {} (exit {}; {})", r.verdict.label(), r.exit_code, EXIT_CODES);
    if let Some(f) = &r.first_failure {
        let _ = writeln!(s, "first failure: {f}");
    }
    for e in &r.errors {
        let _ = writeln!(s, "error: {e}");
    }

    if let Some(b) = &r.borodin {
        let n0 = b.n0.map_or("none".to_string(), |n| n.to_string());
        let _ = writeln!(s, "\ntail-sum condition: {}  n0 {}", if b.passes { "holds" } else { "fails" }, n0);
        let _ = writeln!(s, "{:>4} {:>24}", "n", "d_n - sum_{k>n} d_k");
        for (i, m) in b.margins.iter().enumerate() {
            let _ = writeln!(s, "{:>4} {:>24.16e}", i + 1, m);
        }
        if let Some(f) = b.tail_margin_factor {
            let _ = writeln!(s, "tail margin factor 1 - r/(1-r) = {f:.16e}");
        }
    }
    if let Some(c) = &r.subspace_condition {
        let _ = writeln!(s, "\nstep-span condition at k = {} (ratio {:.6e}): {}", c.k, c.ratio, c.summary);
    }

    if !r.levels.is_empty() {
        let bad = r.first_failing_level();
        let _ = writeln!(s, "\n  {:>4} {:>24} {:>24} {:>12} {:>12}", "k", "d_k", "rho(x, Y_k)", "residual", "gap");
        for row in &r.levels {
            let mark = if Some(row.k) == bad { ">>" } else { "  " };
            let _ = writeln!(
                s,
                "{mark}{:>4} {:>24.16e} {:>24.16e} {:>12.3e} {:>12.3e}",
                row.k, row.target, row.achieved, row.residual, row.certificate_gap
            );
        }
    }
    if let Some(n) = r.x_norm {
        let _ = writeln!(s, "\n||x|| = {n:.16e}");
    }
    if !r.coefficients.is_empty() {
        let _ = writeln!(s, "\n{:>4} {:>24} {:>10} {:>14} {:>14}", "k", "lambda_k", "step", "d_k", "strict");
        for c in &r.coefficients {
            let kind = match c.kind {
                StepKind::Top => "top",
                StepKind::Tie => "tie",
                StepKind::Bisection => "bisect",
                StepKind::Fallback => "fallback",
            };
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6e}"));
            let _ = writeln!(
                s,
                "{:>4} {:>24.16e} {:>10} {:>14} {:>14}",
                c.k,
                c.lambda,
                kind,
                fmt(c.loose_bound),
                fmt(c.strict_bound)
            );
        }
    }
    if let Some(st) = &r.stabilization {
        let _ = writeln!(s, "\n{:>4} {:>12} {:>14} {:>14}", "N", "max resid", "||x_N||", "sup_M>N");
        for (i, p) in st.prefixes.iter().enumerate() {
            let sup = st.sup_tail.get(i).copied().flatten();
            let fmt = |v: Option<f64>, w: usize| v.map_or(format!("{:>w$}", "-"), |v| format!("{v:>w$.6e}"));
            let _ = write!(s, "{:>4} {} {} {}", p.n, fmt(p.max_residual, 12), fmt(p.x_norm, 14), fmt(sup, 14));
            if let Some(e) = &p.error {
                let _ = write!(s, "  error: {e}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "\n||x_N - x_M||");
        for row in &st.differences {
            let cells: Vec<String> = row
                .iter()
                .map(|v| v.map_or(format!("{:>10}", "-"), |v| format!("{v:>10.3e}")))
                .collect();
            let _ = writeln!(s, "  {}", cells.join(" "));
        }
    }
    if !r.checks.is_empty() {
        let _ = writeln!(s);
        for c in &r.checks {
            let status = match (c.passed, c.advisory) {
                (true, _) => "ok",
                (false, true) => "note",
                (false, false) => "FAIL",
            };
            let _ = writeln!(s, "[{status:>4}] {}: {}", c.name, c.detail);
        }
    }
    if let Some(ms) = r.wall_time_ms {
        let _ = writeln!(s, "\nwall time {ms:.3} ms");
    }
    s
}
