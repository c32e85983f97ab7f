use serde::{Deserialize, Serialize};

use crate::distance::{best_approximant, default_tol, rho};
use crate::error::{Error, Result};
use crate::functionals::{norming_functional, Functional};
use crate::space::{validate_chain, Chain, NormSpec, Subspace, Vector};

/// Check applied to `|ρ(y, lower) − 1|` for a freshly normalized step.
const STEP_TOL: f64 = 1e-7;
const FAMILY_BISECT: usize = 200;

/// Unit vector `y ∈ upper` with `ρ(y, lower) = ‖y‖ = 1`.
///
/// Takes the given basis column of `upper` that sticks out of `lower` the
/// most (Euclidean residual, ties to the lowest index) and subtracts its best
/// approximant from `lower`.
pub(crate) fn unit_step(lower: &Subspace, upper: &Subspace, norm: NormSpec) -> Result<Vector> {
    let mut best: Option<(usize, f64)> = None;
    for j in 0..upper.rank() {
        let c = upper.original_column(j);
        let c = c.scaled(1.0 / c.as_dvector().norm());
        let r = c.sub(&lower.project(&c)).as_dvector().norm();
        if best.is_none_or(|(_, b)| r > b + 1e-12) {
            best = Some((j, r));
        }
    }
    let Some((j, _)) = best.filter(|(_, r)| *r > 1e-10) else {
        return Err(Error::Degenerate("upper level adds no direction to the lower one".into()));
    };
    let tol = default_tol(norm).min(1e-9);
    let z = upper.original_column(j);
    let v = best_approximant(&z, lower, norm, tol)?;
    let y = z.sub(&v);
    let y = y.scaled(1.0 / y.norm(norm));
    let d = rho(&y, lower, norm, tol)?.value;
    if (d - 1.0).abs() > STEP_TOL {
        return Err(Error::ToleranceNotMet {
            level: 0,
            residual: (d - 1.0).abs(),
            tol: STEP_TOL,
        });
    }
    Ok(y)
}

/// `y_n ∈ Y_{n+1}` with `‖y_n‖ = ρ(y_n, Y_n) = 1`, for `0 ≤ n < chain.max_level()`.
pub fn normalize_step(chain: &Chain, n: usize) -> Result<Vector> {
    let lower = chain.require_level(n)?;
    let upper = chain.require_level(n + 1)?;
    unit_step(lower, upper, chain.norm()).map_err(|e| match e {
        Error::ToleranceNotMet { residual, tol, .. } => Error::ToleranceNotMet {
            level: n,
            residual,
            tol,
        },
        other => other,
    })
}

#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub q: Vector,
    pub mu: f64,
}

/// Elements `q_m ∈ Q3` with `ρ(q_m, Q1) = u_m` and `ρ(q_m, Q2) = v_m`.
///
/// With `y` a unit step from `Q2` into `Q3` and `x` a unit step from `Q1`
/// into `Q2`, set `w = 2x`, `z = y + w`, and let `f` be the norming functional
/// of `w` over `Q1` pinned at `z`. Members are
/// `q(μ) = v·(z − f(z)·w) + μ·f(z)·w`; the `w` part lies in `Q2`, so
/// `ρ(q(μ), Q2) = v·ρ(y, Q2) = v` for every `μ`, and `μ` is found by bisection
/// on `ρ(q(μ), Q1) = u`, starting from the `μ0` where `q = v·y`.
#[derive(Clone, Debug)]
pub struct InterpolationFamily {
    pub z: Vector,
    pub w: Vector,
    pub f: Functional,
    pub f_z: f64,
    pub members: Vec<FamilyMember>,
    pub u_targets: Vec<f64>,
    pub v_targets: Vec<f64>,
}

impl InterpolationFamily {
    pub fn member(&self, z_part: f64, mu: f64) -> Vector {
        // v·(z − f(z)w) + μ f(z) w
        self.z
            .add_scaled(-self.f_z, &self.w)
            .scaled(z_part)
            .add_scaled(mu * self.f_z, &self.w)
    }
}

pub fn interpolating_family(
    q1: &Subspace,
    q2: &Subspace,
    q3: &Subspace,
    norm: NormSpec,
    u: &[f64],
    v: &[f64],
) -> Result<InterpolationFamily> {
    interpolating_family_anchored(q1, q2, q3, norm, u, v, None, 1e-10)
}

/// As [`interpolating_family`], with the `Q1 → Q2` step supplied by the
/// caller (rescaled so `ρ(x, Q1) = 1`) and an absolute tolerance on
/// `ρ(q_m, Q1) − u_m`.
#[allow(clippy::too_many_arguments)]
pub fn interpolating_family_anchored(
    q1: &Subspace,
    q2: &Subspace,
    q3: &Subspace,
    norm: NormSpec,
    u: &[f64],
    v: &[f64],
    anchor: Option<&Vector>,
    tol: f64,
) -> Result<InterpolationFamily> {
    let report = validate_chain(&[q1.clone(), q2.clone(), q3.clone()]);
    if let Some(msg) = report.dimension_errors.first() {
        return Err(Error::InvalidChain {
            lower: 1,
            upper: 3,
            reason: msg.clone(),
        });
    }
    if let Some(p) = report.first_failure() {
        return Err(Error::InvalidChain {
            lower: p.lower,
            upper: p.upper,
            reason: "family needs Q1 ⊊ Q2 ⊊ Q3".into(),
        });
    }
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    for (m, (a, b)) in u.iter().zip(v).enumerate() {
        if !(a.is_finite() && b.is_finite() && *b >= 0.0 && a >= b) {
            return Err(Error::InvalidTargets(format!(
                "member {}: need u >= v >= 0, got u = {a}, v = {b}",
                m + 1
            )));
        }
    }
    let dist_tol = default_tol(norm).min(1e-10);

    let y = unit_step(q2, q3, norm)?;
    let x = match anchor {
        None => unit_step(q1, q2, norm)?,
        Some(a) => {
            a.check_dim(q1.ambient_dim())?;
            if q2.residual(a) > 1e-9 {
                return Err(Error::Degenerate("anchor must lie in Q2".into()));
            }
            let r = rho(a, q1, norm, dist_tol)?.value;
            if r <= 1e-9 * a.norm(norm).max(1.0) {
                return Err(Error::Degenerate("anchor lies in Q1".into()));
            }
            a.scaled(1.0 / r)
        }
    };
    let w = x.scaled(2.0);
    let z = y.add_scaled(1.0, &w);
    let f = norming_functional(&w, q1, norm, Some(&z))?;
    let f_z = f.apply(&z);
    if f_z <= 0.0 {
        return Err(Error::Degenerate(format!("f(z) = {f_z:e} must be positive")));
    }

    let mut fam = InterpolationFamily {
        z,
        w,
        f,
        f_z,
        members: Vec::with_capacity(u.len()),
        u_targets: u.to_vec(),
        v_targets: v.to_vec(),
    };
    let rw = rho(&fam.w, q1, norm, dist_tol)?.value;
    for (m, (&um, &vm)) in u.iter().zip(v).enumerate() {
        let phi = |mu: f64| -> Result<f64> {
            Ok(rho(&fam.member(vm, mu), q1, norm, dist_tol)?.value - um)
        };
        let mu0 = vm * (f_z - 1.0) / f_z;
        let f0 = phi(mu0)?;
        let mu = if f0.abs() <= tol {
            mu0
        } else {
            // ρ(q(μ), Q1) ≥ |μ − μ0|·f(z)·ρ(w, Q1) − v, so this step clears u
            let mut span = (um + vm) / (f_z * rw) * (1.0 + 1e-9) + tol;
            let mut hi = mu0 + span;
            let mut fhi = phi(hi)?;
            let mut grow = 0;
            while fhi < 0.0 {
                span *= 2.0;
                hi = mu0 + span;
                fhi = phi(hi)?;
                grow += 1;
                if grow > 60 {
                    return Err(Error::BracketFailure {
                        level: m + 1,
                        target: um,
                    });
                }
            }
            let mut lo = mu0;
            let mut best = (hi, fhi.abs());
            for _ in 0..FAMILY_BISECT {
                let mid = 0.5 * (lo + hi);
                let fm = phi(mid)?;
                if fm.abs() < best.1 {
                    best = (mid, fm.abs());
                }
                if fm.abs() <= 0.25 * tol || hi - lo <= 1e-16 * mid.abs().max(1.0) {
                    break;
                }
                if fm < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            best.0
        };
        let q = fam.member(vm, mu);
        fam.members.push(FamilyMember { q, mu });
    }
    Ok(fam)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzPair {
    pub m: usize,
    pub n: usize,
    pub distance: f64,
    pub bound: f64,
    /// `bound − distance`; negative means the inequality fails.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub pairs: Vec<LipschitzPair>,
    pub worst_slack: Option<f64>,
    pub passed: bool,
}

/// `‖q_m − q_n‖ ≤ (‖z‖ + 2)(max{u_m, u_n} − min{v_m, v_n})` for all pairs.
pub fn lipschitz_check(family: &InterpolationFamily, norm: NormSpec) -> LipschitzReport {
    const RELAX: f64 = 1e-9;
    let zn = family.z.norm(norm);
    let k = family.members.len();
    let mut pairs = Vec::new();
    for m in 0..k {
        for n in m + 1..k {
            let distance = family.members[m].q.sub(&family.members[n].q).norm(norm);
            let spread = family.u_targets[m].max(family.u_targets[n])
                - family.v_targets[m].min(family.v_targets[n]);
            let bound = (zn + 2.0) * spread;
            pairs.push(LipschitzPair {
                m: m + 1,
                n: n + 1,
                distance,
                bound,
                slack: bound - distance,
            });
        }
    }
    let worst_slack = pairs.iter().map(|p| p.slack).reduce(f64::min);
    let passed = pairs.iter().all(|p| p.slack >= -RELAX);
    LipschitzReport {
        pairs,
        worst_slack,
        passed,
    }
}
