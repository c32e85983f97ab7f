use std::time::Instant;

use super::report::{Check, CoefficientRow, LevelRow, PrefixRow, Report, Stabilization, Verdict};
use super::{LoadedScenario, Mode};
use crate::distance::rho;
use crate::error::{Error, Result};
use crate::lethargy::{
    build_schedule, check_borodin_condition, check_subspace_condition, construct_prefix, construct_sequence,
    finite_construct, step_span_samples, ConstructOptions, ConstructionTrace, TargetSequence,
};
use crate::space::{Chain, Vector};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Record wall time in the report. Off by default so reports are reproducible.
    pub timing: bool,
}

pub fn run(s: &LoadedScenario, opts: &RunOptions) -> Report {
    let start = Instant::now();
    let mut r = Report {
        scenario: s.spec.name.clone(),
        mode: s.spec.mode,
        norm: s.norm.to_string(),
        ambient_dim: s.spec.ambient_dim,
        tolerance: s.spec.tolerance,
        seed: s.spec.seed,
        verdict: Verdict::Pass,
        exit_code: 0,
        borodin: None,
        subspace_condition: None,
        levels: vec![],
        x: None,
        x_norm: None,
        coefficients: vec![],
        stabilization: None,
        checks: vec![],
        first_failure: None,
        errors: vec![],
        wall_time_ms: None,
    };
    let outcome = match s.spec.mode {
        Mode::CheckOnly => run_checks(s, &mut r),
        Mode::Finite => run_finite(s, &mut r),
        Mode::Prefix => run_prefix(s, &mut r),
        Mode::Sequence => run_sequence(s, &mut r),
    };
    if let Err(e) = outcome {
        record_error(&mut r, &e, None);
    }
    finish(&mut r, s.spec.tolerance);
    if opts.timing {
        r.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    r
}

fn record_error(r: &mut Report, e: &Error, n: Option<usize>) {
    let msg = match n {
        Some(n) => format!("N = {n}: {e}"),
        None => e.to_string(),
    };
    r.errors.push(msg);
    r.verdict = r.verdict.worst(Verdict::from_error(e));
}

fn finish(r: &mut Report, tol: f64) {
    let bad_level = r.levels.iter().find(|l| !l.ok);
    let bad_check = r.checks.iter().find(|c| !c.passed && !c.advisory);
    if bad_level.is_some() || bad_check.is_some() {
        r.verdict = r.verdict.worst(Verdict::Fail);
    }
    r.first_failure = if let Some(e) = r.errors.first() {
        Some(e.clone())
    } else if let Some(l) = bad_level {
        Some(format!("level {}: residual {:e} exceeds {:e}", l.k, l.residual, tol))
    } else {
        bad_check.map(|c| format!("{}: {}", c.name, c.detail))
    };
    r.exit_code = r.verdict.exit_code();
}

fn opts(s: &LoadedScenario) -> ConstructOptions {
    ConstructOptions::with_tol(s.spec.tolerance)
}

/// Re-measures `ρ(x, Y_k)` for `k = 1..=upto` with the distance module.
fn measure(chain: &Chain, x: &Vector, d: &TargetSequence, upto: usize, tol: f64) -> Result<Vec<LevelRow>> {
    (1..=upto)
        .map(|k| {
            let res = rho(x, chain.require_level(k)?, chain.norm(), tol / 10.0)?;
            let target = d.get(k);
            let residual = (res.value - target).abs();
            Ok(LevelRow {
                k,
                target,
                achieved: res.value,
                residual,
                certificate_gap: res.achieved_tol,
                ok: residual <= tol,
            })
        })
        .collect()
}

fn residual_check(rows: &[LevelRow], tol: f64) -> Check {
    let worst = rows.iter().map(|l| l.residual).fold(0.0, f64::max);
    Check {
        name: "residuals".into(),
        passed: rows.iter().all(|l| l.ok),
        advisory: false,
        detail: format!("max |rho(x, Y_k) - d_k| = {worst:e} against tolerance {tol:e}"),
    }
}

fn norm_bound_check(d: &TargetSequence, n: usize, x_norm: f64, tol: f64) -> Option<Check> {
    let vals = d.prefix(n);
    let strict = vals.windows(2).all(|w| w[1] < w[0]);
    if vals.is_empty() || !strict {
        return None;
    }
    let bound = vals[0] + 1.0 + tol;
    Some(Check {
        name: "norm_bound".into(),
        passed: x_norm <= bound,
        advisory: false,
        detail: format!("||x|| = {x_norm:e}, d_1 + 1 + tol = {bound:e}"),
    })
}

fn coefficient_rows(t: &ConstructionTrace) -> Vec<CoefficientRow> {
    t.coefficients
        .iter()
        .zip(&t.step_kinds)
        .enumerate()
        .map(|(i, (&lambda, &kind))| {
            let b = t.bounds.get(i);
            CoefficientRow {
                k: i + 1,
                lambda,
                kind,
                loose_bound: b.map(|b| b.loose),
                strict_bound: b.and_then(|b| b.strict),
            }
        })
        .collect()
}

fn run_checks(s: &LoadedScenario, r: &mut Report) -> Result<()> {
    let b = check_borodin_condition(&s.targets);
    r.checks.push(Check {
        name: "tail_sum_condition".into(),
        passed: b.passes,
        advisory: false,
        detail: match b.n0 {
            Some(n0) => format!("d_n > sum_(k>n) d_k for every n >= {n0} with d_n > 0"),
            None => {
                let worst = b.margins.iter().cloned().fold(f64::INFINITY, f64::min);
                format!("no starting index works; smallest margin {worst:e}")
            }
        },
    });
    r.borodin = Some(b);
    if let Some(sc) = &s.spec.subspace_check {
        let samples = step_span_samples(&s.chain, sc.k, sc.samples, s.spec.seed)?;
        let rep = check_subspace_condition(&s.chain, &s.targets, &samples, sc.k)?;
        r.checks.push(Check {
            name: "step_span_condition".into(),
            passed: rep.no_counterexample,
            advisory: false,
            detail: rep.summary.clone(),
        });
        r.subspace_condition = Some(rep);
    }
    Ok(())
}

fn run_finite(s: &LoadedScenario, r: &mut Report) -> Result<()> {
    let tol = s.spec.tolerance;
    let t = finite_construct(&s.chain, &s.targets, &opts(s))?;
    let n0 = t.coefficients.len();
    let upto = s.targets.len().max(n0 + 1).min(s.chain.max_level());
    r.levels = measure(&s.chain, &t.x, &s.targets, upto, tol)?;
    let x_norm = t.x.norm(s.norm);
    r.checks.push(residual_check(&r.levels, tol));
    r.checks.extend(norm_bound_check(&s.targets, s.targets.len(), x_norm, tol));
    r.coefficients = coefficient_rows(&t);
    r.x = Some(t.x.to_vec());
    r.x_norm = Some(x_norm);
    Ok(())
}

fn schedule_check(d: &TargetSequence, n: usize) -> Option<Check> {
    let n0 = (1..=n).take_while(|&k| d.get(k) > 0.0).count();
    if n0 == 0 {
        return None;
    }
    let passed = build_schedule(d, n0).map(|s| s.is_sane()).unwrap_or(false);
    Some(Check {
        name: "schedule".into(),
        passed,
        advisory: false,
        detail: format!("tau non-negative and non-increasing, u >= v = 1, up to index {n0}"),
    })
}

fn bound_checks<'a>(traces: impl Iterator<Item = &'a ConstructionTrace> + Clone) -> [Check; 2] {
    let all = || traces.clone().flat_map(|t| t.bounds.iter());
    let loose_bad = all().filter(|b| !b.loose_ok).count();
    let strict_total = all().filter(|b| b.strict.is_some()).count();
    let strict_bad = all().filter(|b| b.strict_ok == Some(false)).count();
    let worst_strict = all()
        .filter_map(|b| b.strict.map(|s| b.lambda.abs() - s))
        .fold(f64::NEG_INFINITY, f64::max);
    [
        Check {
            name: "coefficients_within_d_k".into(),
            passed: loose_bad == 0,
            advisory: false,
            detail: format!("{loose_bad} coefficient(s) with |lambda_k| > d_k + tol"),
        },
        Check {
            name: "coefficients_strict".into(),
            passed: strict_bad == 0,
            advisory: true,
            detail: if strict_total == 0 {
                "no interior coefficients".into()
            } else {
                format!(
                    "{strict_bad} of {strict_total} with |lambda_k| > d_k - d_(k+1)(1 - 2^-k) + tol; largest excess {worst_strict:e}"
                )
            },
        },
    ]
}

fn run_prefix(s: &LoadedScenario, r: &mut Report) -> Result<()> {
    let tol = s.spec.tolerance;
    let n = s.spec.n.expect("validated at load");
    r.borodin = Some(check_borodin_condition(&s.targets));
    let t = construct_prefix(&s.chain, &s.targets, n, &opts(s))?;
    r.levels = measure(&s.chain, &t.x, &s.targets, n, tol)?;
    let x_norm = t.x.norm(s.norm);
    r.checks.push(residual_check(&r.levels, tol));
    r.checks.extend(norm_bound_check(&s.targets, n, x_norm, tol));
    r.checks.extend(schedule_check(&s.targets, n));
    r.checks.extend(bound_checks(std::iter::once(&t)));
    r.coefficients = coefficient_rows(&t);
    r.x = Some(t.x.to_vec());
    r.x_norm = Some(x_norm);
    Ok(())
}

fn run_sequence(s: &LoadedScenario, r: &mut Report) -> Result<()> {
    let tol = s.spec.tolerance;
    let n_max = s.spec.n_max.expect("validated at load");
    let out = construct_sequence(&s.chain, &s.targets, n_max, &opts(s))?;
    r.borodin = Some(out.borodin.clone());

    let mut rows = Vec::with_capacity(n_max);
    let mut all_levels_ok = true;
    let mut worst = 0.0_f64;
    for p in &out.prefixes {
        match &p.result {
            Ok(t) => {
                let levels = measure(&s.chain, &t.x, &s.targets, p.n, tol)?;
                let m = levels.iter().map(|l| l.residual).fold(0.0, f64::max);
                worst = worst.max(m);
                all_levels_ok &= levels.iter().all(|l| l.ok);
                rows.push(PrefixRow {
                    n: p.n,
                    max_residual: Some(m),
                    x_norm: Some(t.x.norm(s.norm)),
                    error: None,
                });
                if p.n == n_max {
                    r.levels = levels;
                    r.coefficients = coefficient_rows(t);
                    r.x = Some(t.x.to_vec());
                    r.x_norm = Some(t.x.norm(s.norm));
                }
            }
            Err(e) => {
                record_error(r, e, Some(p.n));
                rows.push(PrefixRow {
                    n: p.n,
                    max_residual: None,
                    x_norm: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    r.checks.push(Check {
        name: "residuals".into(),
        passed: all_levels_ok,
        advisory: false,
        detail: format!("max |rho(x_N, Y_k) - d_k| over all prefixes = {worst:e} against tolerance {tol:e}"),
    });
    r.checks.extend(schedule_check(&s.targets, n_max));
    let traces: Vec<&ConstructionTrace> = out.prefixes.iter().filter_map(|p| p.result.as_ref().ok()).collect();
    r.checks.extend(bound_checks(traces.iter().copied()));
    if let Some(ok) = out.non_increasing {
        r.checks.push(Check {
            name: "stabilization".into(),
            passed: ok,
            advisory: false,
            detail: "max_(M>N) ||x_N - x_M|| non-increasing in N".into(),
        });
    }
    r.stabilization = Some(Stabilization {
        prefixes: rows,
        differences: out.differences,
        sup_tail: out.sup_tail,
        non_increasing: out.non_increasing,
    });
    Ok(())
}
