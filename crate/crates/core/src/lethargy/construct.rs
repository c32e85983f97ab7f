use serde::{Deserialize, Serialize};

use super::conditions::{build_schedule, check_borodin_condition, BorodinReport, BorodinSchedule};
use super::steps::{interpolating_family_anchored, normalize_step, InterpolationFamily};
use super::targets::{last_nonzero, TargetSequence};
use crate::distance::{best_approximant, rho, DistanceResult};
use crate::error::{Error, Result};
use crate::space::{Chain, Subspace, Vector};

pub const CONSTRUCT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstructOptions {
    /// Allowed `|ρ(x, Y_k) − d_k|`; distance sub-calls run at a tenth of it.
    pub tol: f64,
    pub max_bisect: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            tol: CONSTRUCT_TOL,
            max_bisect: 200,
        }
    }
}

impl ConstructOptions {
    pub fn with_tol(tol: f64) -> Self {
        ConstructOptions {
            tol,
            ..Default::default()
        }
    }

    fn dist_tol(&self) -> f64 {
        self.tol / 10.0
    }
}

/// How the coefficient at one level was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// Top level, `λ = d_N`.
    Top,
    /// The current point already has the target distance; `λ = 0`.
    Tie,
    Bisection,
    /// The step line never reaches the target from above; moved towards the
    /// best approximant from the next level instead.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBound {
    pub k: usize,
    pub lambda: f64,
    /// `d_k`
    pub loose: f64,
    /// `d_k − d_{k+1}(1 − 2^{−k})`, absent at the top level.
    pub strict: Option<f64>,
    pub loose_ok: bool,
    pub strict_ok: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct ConstructionTrace {
    pub x: Vector,
    /// `step_vectors[k − 1]` is the direction used at level `k`.
    pub step_vectors: Vec<Vector>,
    pub coefficients: Vec<f64>,
    pub step_kinds: Vec<StepKind>,
    /// `ρ(x, Y_k)` for every measured level `k = 1, 2, …`.
    pub achieved: Vec<DistanceResult>,
    pub targets: TargetSequence,
    pub residuals: Vec<f64>,
    /// `Y_1` component removed after the backward pass.
    pub shift: Vector,
    /// Filled by [`construct_prefix`].
    pub bounds: Vec<CoefficientBound>,
}

impl ConstructionTrace {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

struct Level<'a> {
    k: usize,
    lower: &'a Subspace,
    upper: &'a Subspace,
}

/// Solves `ρ(x + λ·q, Y_k) = d` for the root of smallest magnitude.
fn solve_level(
    chain: &Chain,
    lvl: &Level,
    x: &Vector,
    q: &Vector,
    d: f64,
    opts: &ConstructOptions,
) -> Result<(f64, Vector, StepKind)> {
    let norm = chain.norm();
    let dt = opts.dist_tol();
    let phi = |t: f64, dir: &Vector| -> Result<f64> {
        Ok(rho(&x.add_scaled(t, dir), lvl.lower, norm, dt)?.value)
    };
    let a = phi(0.0, q)?;
    if (a - d).abs() <= 0.5 * opts.tol {
        return Ok((0.0, q.clone(), StepKind::Tie));
    }
    let rq = rho(q, lvl.lower, norm, dt)?.value;
    if rq <= 0.0 {
        return Err(Error::Degenerate(format!("step at level {} lies in Y_{}", lvl.k, lvl.k)));
    }

    if a < d {
        // φ is convex with φ(0) < d: one crossing on each side of 0
        let start = (d - a) / rq;
        let pos = bracket_and_bisect(|t| phi(t, q), d, 1.0, start, lvl.k, opts)?;
        let neg_side = phi(-pos, q)?;
        let lam = if neg_side > d {
            let neg = bisect(|t| phi(t, q), d, 0.0, a, -pos, neg_side, opts)?;
            if neg.abs() < pos {
                neg
            } else {
                pos
            }
        } else {
            pos
        };
        return Ok((lam, q.clone(), StepKind::Bisection));
    }

    // a > d: look for a point of the line below the target
    let reach = 2.0 * a / rq;
    if let Some((t, ft)) = golden_search_below(|t| phi(t, q), d, -reach, reach, opts)? {
        if ft >= d - 0.5 * opts.tol {
            return Ok((t, q.clone(), StepKind::Bisection));
        }
        let lam = bisect(|t| phi(t, q), d, 0.0, a, t, ft, opts)?;
        return Ok((lam, q.clone(), StepKind::Bisection));
    }

    // Move towards the best approximant p from Y_{k+1}: ψ(s) = ρ(x − s·p, Y_k)
    // is convex with ψ(0) = a > d ≥ d_{k+1} ≥ ψ(1).
    let p = best_approximant(x, lvl.upper, norm, dt)?;
    let dir = p.scaled(-1.0);
    let f1 = phi(1.0, &dir)?;
    if f1 > d + 0.5 * opts.tol {
        return Err(Error::BracketFailure { level: lvl.k, target: d });
    }
    let s = bisect(|t| phi(t, &dir), d, 0.0, a, 1.0, f1, opts)?;
    Ok((s, dir, StepKind::Fallback))
}

/// Doubles `t = sign·start·2^i` until `f(t) ≥ target`, then bisects on `[0, t]`.
fn bracket_and_bisect(
    f: impl Fn(f64) -> Result<f64>,
    target: f64,
    sign: f64,
    start: f64,
    level: usize,
    opts: &ConstructOptions,
) -> Result<f64> {
    let f0 = f(0.0)?;
    let mut lo = 0.0;
    let mut flo = f0;
    let mut t = start.max(1e-12);
    for _ in 0..200 {
        let ft = f(sign * t)?;
        if ft >= target {
            return bisect(&f, target, sign * lo, flo, sign * t, ft, opts);
        }
        lo = t;
        flo = ft;
        t *= 2.0;
    }
    Err(Error::BracketFailure { level, target })
}

/// Bisection for `f = target` on a bracket `[a, b]` (either order).
fn bisect(
    f: impl Fn(f64) -> Result<f64>,
    target: f64,
    mut a: f64,
    fa: f64,
    mut b: f64,
    fb: f64,
    opts: &ConstructOptions,
) -> Result<f64> {
    let below_at_a = fa < target;
    let mut best = if (fa - target).abs() <= (fb - target).abs() {
        (a, (fa - target).abs())
    } else {
        (b, (fb - target).abs())
    };
    for _ in 0..opts.max_bisect {
        if best.1 <= 0.25 * opts.tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let fm = f(mid)?;
        if (fm - target).abs() < best.1 {
            best = (mid, (fm - target).abs());
        }
        if (fm < target) == below_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(best.0)
}

/// Golden-section search for the minimum of a convex `f` on `[lo, hi]`,
/// stopping at the first evaluated point with `f ≤ target + tol/2`.
fn golden_search_below(
    f: impl Fn(f64) -> Result<f64>,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    opts: &ConstructOptions,
) -> Result<Option<(f64, f64)>> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let hit = |v: f64| v <= target + 0.5 * opts.tol;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut e = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    let mut fe = f(e)?;
    for _ in 0..opts.max_bisect {
        if hit(fc) {
            return Ok(Some((c, fc)));
        }
        if hit(fe) {
            return Ok(Some((e, fe)));
        }
        if (hi - lo) <= 1e-15 * (1.0 + c.abs()) {
            break;
        }
        if fc < fe {
            hi = e;
            e = c;
            fe = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = e;
            fc = fe;
            e = lo + INV_PHI * (hi - lo);
            fe = f(e)?;
        }
    }
    Ok(None)
}

struct Backward {
    x: Vector,
    steps: Vec<Vector>,
    coefficients: Vec<f64>,
    kinds: Vec<StepKind>,
    shift: Vector,
}

/// Backward pass over levels `n..1` with preferred directions `q_k`.
fn backward(chain: &Chain, d: &[f64], q: &[Vector], opts: &ConstructOptions) -> Result<Backward> {
    let n = d.len();
    debug_assert_eq!(q.len(), n);
    let mut x = q[n - 1].scaled(d[n - 1]);
    let mut steps = vec![q[n - 1].clone()];
    let mut coefficients = vec![d[n - 1]];
    let mut kinds = vec![StepKind::Top];
    for k in (1..n).rev() {
        let lvl = Level {
            k,
            lower: chain.require_level(k)?,
            upper: chain.require_level(k + 1)?,
        };
        let (lam, dir, kind) = solve_level(chain, &lvl, &x, &q[k - 1], d[k - 1], opts)?;
        x = x.add_scaled(lam, &dir);
        steps.push(dir);
        coefficients.push(lam);
        kinds.push(kind);
    }
    steps.reverse();
    coefficients.reverse();
    kinds.reverse();

    // every ρ(·, Y_k), k ≥ 1, is invariant under shifts by Y_1; removing the
    // best approximant from Y_1 leaves ‖x‖ = ρ(x, Y_1) = d_1
    let y1 = chain.require_level(1)?;
    let shift = best_approximant(&x, y1, chain.norm(), opts.dist_tol())?;
    let x = x.sub(&shift);
    Ok(Backward {
        x,
        steps,
        coefficients,
        kinds,
        shift,
    })
}

fn measure(
    chain: &Chain,
    x: &Vector,
    targets: &[f64],
    opts: &ConstructOptions,
) -> Result<(Vec<DistanceResult>, Vec<f64>)> {
    let mut achieved = Vec::with_capacity(targets.len());
    let mut residuals = Vec::with_capacity(targets.len());
    for (i, &dk) in targets.iter().enumerate() {
        let r = rho(x, chain.require_level(i + 1)?, chain.norm(), opts.dist_tol())?;
        residuals.push((r.value - dk).abs());
        achieved.push(r);
    }
    Ok((achieved, residuals))
}

fn check_opts(opts: &ConstructOptions) -> Result<()> {
    if !(opts.tol > 0.0) || !opts.tol.is_finite() {
        return Err(Error::InvalidTolerance(opts.tol));
    }
    Ok(())
}

fn assemble(
    chain: &Chain,
    d: &TargetSequence,
    measured: &[f64],
    back: Option<Backward>,
    opts: &ConstructOptions,
) -> Result<ConstructionTrace> {
    let m = chain.ambient_dim();
    let back = back.unwrap_or(Backward {
        x: Vector::zeros(m),
        steps: vec![],
        coefficients: vec![],
        kinds: vec![],
        shift: Vector::zeros(m),
    });
    let (achieved, residuals) = measure(chain, &back.x, measured, opts)?;
    if let Some((i, r)) = residuals
        .iter()
        .enumerate()
        .find(|(_, r)| **r > opts.tol)
    {
        return Err(Error::ToleranceNotMet {
            level: i + 1,
            residual: *r,
            tol: opts.tol,
        });
    }
    Ok(ConstructionTrace {
        x: back.x,
        step_vectors: back.steps,
        coefficients: back.coefficients,
        step_kinds: back.kinds,
        achieved,
        targets: d.clone(),
        residuals,
        shift: back.shift,
        bounds: vec![],
    })
}

/// An `x` with `ρ(x, Y_k) = d_k` for every stored `k`, for a finitely
/// supported non-increasing `d`.
pub fn finite_construct(
    chain: &Chain,
    d: &TargetSequence,
    opts: &ConstructOptions,
) -> Result<ConstructionTrace> {
    check_opts(opts)?;
    if !d.is_finitely_supported() {
        return Err(Error::InvalidTail);
    }
    let vals = d.values();
    let n0 = last_nonzero(vals);
    let measured = &vals[..vals.len().min(chain.max_level())];
    if n0 == 0 {
        return assemble(chain, d, measured, None, opts);
    }
    chain.require_level(n0 + 1)?;
    let q = (1..=n0)
        .map(|k| normalize_step(chain, k))
        .collect::<Result<Vec<_>>>()?;
    let back = backward(chain, &vals[..n0], &q, opts)?;
    assemble(chain, d, measured, Some(back), opts)
}

/// Step directions for the truncated construction: `q_{j,n}` for level `j`
/// and truncation index `n`, shared across `n`.
pub struct StepFamilies {
    n_max: usize,
    /// `families[j − 1]` is `None` when `Y_j = {0}`.
    families: Vec<Option<InterpolationFamily>>,
    plain: Vec<Vector>,
    pub schedule: BorodinSchedule,
}

impl StepFamilies {
    /// Families for levels `1..=n_max`, members for `n = j..=n_max`.
    pub fn build(chain: &Chain, d: &TargetSequence, n_max: usize) -> Result<Self> {
        let schedule = build_schedule(d, n_max)?;
        let norm = chain.norm();
        let y0 = chain.require_level(0)?;
        let mut families = Vec::with_capacity(n_max);
        let mut plain = Vec::with_capacity(n_max);
        for j in 1..=n_max {
            let yj = chain.require_level(j)?;
            let yj1 = chain.require_level(j + 1)?;
            plain.push(normalize_step(chain, j)?);
            if yj.rank() == 0 {
                families.push(None);
                continue;
            }
            let anchor = normalize_step(chain, j - 1)?;
            let u: Vec<f64> = (j..=n_max).map(|n| schedule.u(n, j)).collect();
            let v = vec![1.0; u.len()];
            let fam = interpolating_family_anchored(y0, yj, yj1, norm, &u, &v, Some(&anchor), 1e-10)?;
            families.push(Some(fam));
        }
        Ok(StepFamilies {
            n_max,
            families,
            plain,
            schedule,
        })
    }

    /// `q_{j,n}` (1-based, `j ≤ n ≤ n_max`).
    pub fn step(&self, j: usize, n: usize) -> &Vector {
        assert!(j >= 1 && j <= n && n <= self.n_max);
        match &self.families[j - 1] {
            Some(f) => &f.members[n - j].q,
            None => &self.plain[j - 1],
        }
    }

    pub fn family(&self, j: usize) -> Option<&InterpolationFamily> {
        self.families[j - 1].as_ref()
    }
}

fn prefix_with(
    chain: &Chain,
    d: &TargetSequence,
    n: usize,
    n0: usize,
    fams: Option<&StepFamilies>,
    opts: &ConstructOptions,
) -> Result<ConstructionTrace> {
    let vals = d.prefix(n);
    if n0 == 0 {
        return assemble(chain, d, &vals, None, opts);
    }
    let fams = fams.expect("families exist when a target is non-zero");
    let q: Vec<Vector> = (1..=n0).map(|j| fams.step(j, n0).clone()).collect();
    let back = backward(chain, &vals[..n0], &q, opts)?;
    let mut trace = assemble(chain, d, &vals, Some(back), opts)?;
    trace.bounds = (1..=n0)
        .map(|k| {
            let lambda = trace.coefficients[k - 1];
            let dk = vals[k - 1];
            let strict = (k < n).then(|| dk - vals[k] * (1.0 - 0.5f64.powi(k as i32)));
            CoefficientBound {
                k,
                lambda,
                loose: dk,
                strict,
                loose_ok: lambda.abs() <= dk + opts.tol,
                strict_ok: strict.map(|s| lambda.abs() <= s + opts.tol),
            }
        })
        .collect();
    Ok(trace)
}

fn prefix_preconditions(chain: &Chain, d: &TargetSequence, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidTargets("prefix length must be at least 1".into()));
    }
    if !d.is_finitely_supported() && !check_borodin_condition(d).passes {
        return Err(Error::ConditionFails);
    }
    let n0 = last_nonzero(&d.prefix(n));
    chain.require_level(n0 + 1)?;
    chain.require_level(n)?;
    Ok(n0)
}

/// `x_N` of the truncated construction: the backward pass run with the
/// schedule-driven interpolating steps `q_{j,N}`.
pub fn construct_prefix(
    chain: &Chain,
    d: &TargetSequence,
    n: usize,
    opts: &ConstructOptions,
) -> Result<ConstructionTrace> {
    check_opts(opts)?;
    let n0 = prefix_preconditions(chain, d, n)?;
    let fams = if n0 > 0 {
        Some(StepFamilies::build(chain, d, n0)?)
    } else {
        None
    };
    prefix_with(chain, d, n, n0, fams.as_ref(), opts)
}

#[derive(Clone, Debug)]
pub struct PrefixOutcome {
    pub n: usize,
    pub result: std::result::Result<ConstructionTrace, Error>,
}

#[derive(Clone, Debug)]
pub struct SequenceOutcome {
    pub prefixes: Vec<PrefixOutcome>,
    /// `differences[N−1][M−1] = ‖x_N − x_M‖`, `None` when either prefix failed.
    pub differences: Vec<Vec<Option<f64>>>,
    /// `max_{M>N} ‖x_N − x_M‖` for `N = 1..N_max−1`.
    pub sup_tail: Vec<Option<f64>>,
    pub borodin: BorodinReport,
    /// Whether `sup_tail` is non-increasing (within `opts.tol`); only judged
    /// when the sufficient condition holds and every prefix succeeded.
    pub non_increasing: Option<bool>,
}

pub fn construct_sequence(
    chain: &Chain,
    d: &TargetSequence,
    n_max: usize,
    opts: &ConstructOptions,
) -> Result<SequenceOutcome> {
    check_opts(opts)?;
    if n_max == 0 {
        return Err(Error::InvalidTargets("N_max must be at least 1".into()));
    }
    let borodin = check_borodin_condition(d);
    let top = last_nonzero(&d.prefix(n_max));
    let fams = match prefix_preconditions(chain, d, n_max) {
        Ok(_) if top > 0 => Some(StepFamilies::build(chain, d, top)),
        Ok(_) => None,
        Err(e) => Some(Err(e)),
    };
    let mut prefixes = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let result = match &fams {
            Some(Err(e)) => Err(e.clone()),
            Some(Ok(f)) => prefix_with(chain, d, n, n.min(top), Some(f), opts),
            None => prefix_with(chain, d, n, 0, None, opts),
        };
        prefixes.push(PrefixOutcome { n, result });
    }
    let norm = chain.norm();
    let differences: Vec<Vec<Option<f64>>> = prefixes
        .iter()
        .map(|a| {
            prefixes
                .iter()
                .map(|b| match (&a.result, &b.result) {
                    (Ok(ta), Ok(tb)) => Some(ta.x.sub(&tb.x).norm(norm)),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let sup_tail: Vec<Option<f64>> = (0..n_max.saturating_sub(1))
        .map(|i| {
            differences[i][i + 1..]
                .iter()
                .try_fold(0.0_f64, |m, v| v.map(|v| m.max(v)))
        })
        .collect();
    let non_increasing = if borodin.passes && sup_tail.iter().all(Option::is_some) {
        let s: Vec<f64> = sup_tail.iter().map(|v| v.unwrap()).collect();
        Some(s.windows(2).all(|w| w[1] <= w[0] + opts.tol))
    } else {
        None
    };
    Ok(SequenceOutcome {
        prefixes,
        differences,
        sup_tail,
        borodin,
        non_increasing,
    })
}
