//! Best approximation from a subspace: `ρ(x, Y) = min_{y ∈ Y} ‖x - y‖_p`.
//!
//! Every solver returns a certified gap: a dual vector `h ⊥ Y` gives the lower
//! bound `⟨x, h⟩ / ‖h‖_q ≤ ρ(x, Y)`, and the reported `achieved_tol` is the
//! distance between that bound and the attained value.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp;
use crate::space::{NormSpec, Subspace, Vector};

pub const DEFAULT_TOL_L2: f64 = 1e-10;
pub const DEFAULT_TOL_LP: f64 = 1e-8;
pub const DEFAULT_TOL_SMOOTH: f64 = 1e-7;

const NEWTON_MAX_ITER: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// `Y = {0}` or `x = 0`.
    Trivial,
    Projection,
    Simplex,
    Newton,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    /// Coefficients of the best approximant in the orthonormal basis of `Y`.
    pub witness_coeffs: Vec<f64>,
    /// Certified absolute gap `value - lower_bound`.
    pub achieved_tol: f64,
    pub solver: Solver,
}

pub fn default_tol(norm: NormSpec) -> f64 {
    if norm.is_l2() {
        DEFAULT_TOL_L2
    } else if norm.is_l1() || norm.is_linf() {
        DEFAULT_TOL_LP
    } else {
        DEFAULT_TOL_SMOOTH
    }
}

/// Distance from `x` to `y` in the `norm`.
///
/// `tol` is relative: the certified gap must not exceed `tol * max(1, ‖x‖)`.
pub fn rho(x: &Vector, y: &Subspace, norm: NormSpec, tol: f64) -> Result<DistanceResult> {
    x.check_dim(y.ambient_dim())?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    let r = y.rank();
    let xn = x.norm(norm);
    if r == 0 || xn == 0.0 {
        return Ok(DistanceResult {
            value: xn,
            witness_coeffs: vec![0.0; r],
            achieved_tol: 0.0,
            solver: Solver::Trivial,
        });
    }
    // work with ‖x̂‖ = 1
    let xh = x.as_dvector() / xn;
    let q = y.basis();
    let (c, solver, h) = if norm.is_l2() {
        let (c, h) = solve_l2(&xh, q);
        (c, Solver::Projection, h)
    } else if norm.is_l1() {
        let (c, h) = solve_l1(&xh, q)?;
        (c, Solver::Simplex, h)
    } else if norm.is_linf() {
        let (c, h) = solve_linf(&xh, q)?;
        (c, Solver::Simplex, h)
    } else {
        let (c, h) = solve_newton(&xh, q, norm)?;
        (c, Solver::Newton, h)
    };
    let resid = &xh - q * &c;
    let value = norm.eval(resid.as_slice());
    let gap = (value - lower_bound(&xh, q, &h, norm)).max(0.0);
    let budget = tol * xn.max(1.0) / xn;
    if gap > budget {
        return Err(Error::NonConvergence {
            solver: solver_name(solver),
            iterations: 0,
            value: value * xn,
            gap: gap * xn,
        });
    }
    Ok(DistanceResult {
        value: value * xn,
        witness_coeffs: (c * xn).as_slice().to_vec(),
        achieved_tol: gap * xn,
        solver,
    })
}

/// A closest point of `y` to `x`.
pub fn best_approximant(x: &Vector, y: &Subspace, norm: NormSpec, tol: f64) -> Result<Vector> {
    let d = rho(x, y, norm, tol)?;
    if y.rank() == 0 {
        return Ok(Vector::zeros(y.ambient_dim()));
    }
    Ok(y.combine(&d.witness_coeffs))
}

fn solver_name(s: Solver) -> &'static str {
    match s {
        Solver::Trivial => "trivial",
        Solver::Projection => "projection",
        Solver::Simplex => "simplex",
        Solver::Newton => "newton",
    }
}

/// `⟨x, h'⟩ / ‖h'‖_q` with `h'` the part of `h` orthogonal to `span(q)`.
fn lower_bound(x: &DVector<f64>, q: &DMatrix<f64>, h: &DVector<f64>, norm: NormSpec) -> f64 {
    let hp = h - q * q.tr_mul(h);
    let dn = norm.dual().eval(hp.as_slice());
    if dn == 0.0 {
        return 0.0;
    }
    (x.dot(&hp) / dn).abs()
}

fn solve_l2(x: &DVector<f64>, q: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let mut c = q.tr_mul(x);
    let r = x - q * &c;
    c += q.tr_mul(&r);
    let r = x - q * &c;
    (c, r)
}

fn solve_l1(x: &DVector<f64>, q: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    // columns: c+ (r), c- (r), e+ (m), e- (m)
    let (m, r) = q.shape();
    let n = 2 * r + 2 * m;
    let mut a = vec![0.0; m * n];
    let mut cost = vec![0.0; n];
    for i in 0..m {
        for j in 0..r {
            a[i * n + j] = q[(i, j)];
            a[i * n + r + j] = -q[(i, j)];
        }
        a[i * n + 2 * r + i] = 1.0;
        a[i * n + 2 * r + m + i] = -1.0;
    }
    for v in cost.iter_mut().skip(2 * r) {
        *v = 1.0;
    }
    let start: Vec<usize> = (0..m)
        .map(|i| if x[i] >= 0.0 { 2 * r + i } else { 2 * r + m + i })
        .collect();
    let out = lp::minimize(&a, m, n, x.as_slice(), &cost, &start)?;
    let c = DVector::from_fn(r, |j, _| out.x[j] - out.x[r + j]);
    // reduced cost of e+_i is 1 - y_i
    let h = DVector::from_fn(m, |i, _| 1.0 - out.reduced_costs[2 * r + i]);
    Ok((c, h))
}

fn solve_linf(x: &DVector<f64>, q: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    // columns: c+ (r), c- (r), t, s+ (m), s- (m); rows (i, +) and (i, -)
    //   (Qc)_i + t - s+_i =  x_i
    //  -(Qc)_i + t - s-_i = -x_i
    let (m, r) = q.shape();
    let n = 2 * r + 1 + 2 * m;
    let rows = 2 * m;
    let tcol = 2 * r;
    let sp = |i: usize| 2 * r + 1 + i;
    let sm = |i: usize| 2 * r + 1 + m + i;
    let mut a = vec![0.0; rows * n];
    let mut b = vec![0.0; rows];
    for i in 0..m {
        let (up, dn) = (2 * i, 2 * i + 1);
        for j in 0..r {
            a[up * n + j] = q[(i, j)];
            a[up * n + r + j] = -q[(i, j)];
            a[dn * n + j] = -q[(i, j)];
            a[dn * n + r + j] = q[(i, j)];
        }
        a[up * n + tcol] = 1.0;
        a[dn * n + tcol] = 1.0;
        a[up * n + sp(i)] = -1.0;
        a[dn * n + sm(i)] = -1.0;
        b[up] = x[i];
        b[dn] = -x[i];
    }
    let mut cost = vec![0.0; n];
    cost[tcol] = 1.0;
    // c = 0, t = ‖x‖∞; the slack that vanishes at the peak entry stays nonbasic
    let peak = x.iamax();
    let skip = if x[peak] >= 0.0 { sp(peak) } else { sm(peak) };
    let mut start = vec![tcol];
    start.extend((0..m).flat_map(|i| [sp(i), sm(i)]).filter(|&col| col != skip));
    let out = lp::minimize(&a, rows, n, &b, &cost, &start)?;
    let c = DVector::from_fn(r, |j, _| out.x[j] - out.x[r + j]);
    // the slack column of a row is -e_row with zero cost, so its reduced cost is y_row
    let h = DVector::from_fn(m, |i, _| out.reduced_costs[sp(i)] - out.reduced_costs[sm(i)]);
    Ok((c, h))
}

fn solve_newton(
    x: &DVector<f64>,
    q: &DMatrix<f64>,
    norm: NormSpec,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let p = norm.p();
    let r_dim = q.ncols();
    let phi = |c: &DVector<f64>| -> f64 {
        (x - q * c).iter().map(|v| v.abs().powf(p)).sum::<f64>() / p
    };
    let grad_vec = |res: &DVector<f64>| res.map(|v| v.signum() * v.abs().powf(p - 1.0));

    let mut c = q.tr_mul(x);
    let mut f = phi(&c);
    let mut best_gap = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let res = x - q * &c;
        let g = grad_vec(&res);
        let value = norm.eval(res.as_slice());
        let gap = value - lower_bound(x, q, &g, norm);
        best_gap = best_gap.min(gap);
        if gap <= 1e-15 {
            break;
        }
        let grad = -q.tr_mul(&g);
        let peak = res.amax();
        let floor = (peak * 1e-10).max(f64::MIN_POSITIVE);
        let w = res.map(|v| (p - 1.0) * v.abs().max(floor).powf(p - 2.0));
        let mut h = DMatrix::zeros(r_dim, r_dim);
        for i in 0..q.nrows() {
            let row = q.row(i);
            h += row.transpose() * row * w[i];
        }
        let ridge = 1e-14 * h.trace().max(f64::MIN_POSITIVE);
        for j in 0..r_dim {
            h[(j, j)] += ridge;
        }
        let step = match h.clone().cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -&grad,
        };
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = &c + &step * t;
            let ft = phi(&trial);
            if ft <= f + 1e-4 * t * slope {
                c = trial;
                f = ft;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let res = x - q * &c;
    Ok((c, grad_vec(&res)))
}

/// Brute-force minimum of `‖x - Qc‖` over the grid `c ∈ [-radius, radius]^rank`
/// with `grid_steps` points per axis; `Q` is the orthonormal basis of `y`.
///
/// The innermost axis is scanned from the previous line's minimizer: a convex
/// function sampled along a line is unimodal, so this returns the exact grid
/// minimum at a fraction of the cost.
pub fn rho_oracle(
    x: &Vector,
    y: &Subspace,
    norm: NormSpec,
    radius: f64,
    grid_steps: usize,
) -> Result<f64> {
    x.check_dim(y.ambient_dim())?;
    let r = y.rank();
    if r > 3 {
        return Err(Error::RankTooLarge { rank: r, max: 3 });
    }
    if r == 0 {
        return Ok(x.norm(norm));
    }
    if grid_steps < 2 || !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Degenerate(format!(
            "oracle grid needs radius > 0 and at least 2 steps (got {radius}, {grid_steps})"
        )));
    }
    let h = 2.0 * radius / (grid_steps - 1) as f64;
    let coord = |i: usize| -radius + h * i as f64;
    let q = y.basis();
    let m = x.dim();
    let xs = x.as_slice();
    let mut buf = vec![0.0; m];
    let mut eval = |base: &[f64], t: f64, last: usize| -> f64 {
        for i in 0..m {
            buf[i] = base[i] - t * q[(i, last)];
        }
        norm.eval(&buf)
    };

    let last = r - 1;
    let mut best = f64::INFINITY;
    let mut base = vec![0.0; m];
    let mut start = grid_steps / 2;
    let outer = grid_steps.pow(last as u32);
    for o in 0..outer {
        // base = x - sum of the outer axes
        base.copy_from_slice(xs);
        let mut idx = o;
        for j in 0..last {
            let cj = coord(idx % grid_steps);
            idx /= grid_steps;
            for i in 0..m {
                base[i] -= cj * q[(i, j)];
            }
        }
        let mut k = start;
        let mut fk = eval(&base, coord(k), last);
        while k + 1 < grid_steps {
            let f = eval(&base, coord(k + 1), last);
            if f < fk {
                k += 1;
                fk = f;
            } else {
                break;
            }
        }
        while k > 0 {
            let f = eval(&base, coord(k - 1), last);
            if f < fk {
                k -= 1;
                fk = f;
            } else {
                break;
            }
        }
        start = k;
        best = best.min(fk);
    }
    Ok(best)
}

/// Coefficient box guaranteed to contain every minimizer: `‖Qc*‖_p ≤ 2‖x‖_p`,
/// and `|c*_j| = |⟨q_j, Qc*⟩| ≤ ‖q_j‖_q ‖Qc*‖_p`.
pub fn oracle_radius(x: &Vector, y: &Subspace, norm: NormSpec) -> f64 {
    let dual = norm.dual();
    let qmax = (0..y.rank())
        .map(|j| y.column(j).norm(dual))
        .fold(0.0_f64, f64::max);
    2.0 * x.norm(norm) * qmax
}

/// Worst-case excess of the grid minimum over the true minimum.
pub fn oracle_resolution(y: &Subspace, norm: NormSpec, radius: f64, grid_steps: usize) -> f64 {
    let h = 2.0 * radius / (grid_steps.max(2) - 1) as f64;
    (0..y.rank()).map(|j| 0.5 * h * y.column(j).norm(norm)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    fn line(d: &[f64]) -> Subspace {
        Subspace::span(d.len(), &[v(d)]).unwrap()
    }

    #[test]
    fn l1_example() {
        let d = rho(&v(&[1.0, -1.0]), &line(&[1.0, 1.0]), NormSpec::L1, 1e-10).unwrap();
        assert!((d.value - 2.0).abs() < 1e-12);
        assert_eq!(d.solver, Solver::Simplex);
    }

    #[test]
    fn linf_example() {
        let d = rho(&v(&[1.0, 0.0]), &line(&[1.0, 1.0]), NormSpec::LINF, 1e-10).unwrap();
        assert!((d.value - 0.5).abs() < 1e-12);
        let y = best_approximant(&v(&[1.0, 0.0]), &line(&[1.0, 1.0]), NormSpec::LINF, 1e-10).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-12 && (y[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn l2_example() {
        let y = Subspace::coordinate(3, 1).unwrap();
        let d = rho(&v(&[3.0, 4.0, 0.0]), &y, NormSpec::L2, 1e-12).unwrap();
        assert!((d.value - 4.0).abs() < 1e-14);
        assert_eq!(d.solver, Solver::Projection);
    }

    #[test]
    fn zero_subspace_and_zero_vector() {
        let d = rho(&v(&[1.0, -2.0]), &Subspace::zero(2), NormSpec::L1, 1e-10).unwrap();
        assert_eq!(d.value, 3.0);
        assert_eq!(d.solver, Solver::Trivial);
        let d = rho(&Vector::zeros(2), &line(&[1.0, 0.0]), NormSpec::LINF, 1e-10).unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn general_p_matches_oracle() {
        let y = line(&[1.0, 2.0, -1.0]);
        let x = v(&[0.5, -1.0, 2.0]);
        for p in [1.5, 3.0, 6.0] {
            let norm = NormSpec::new(p).unwrap();
            let d = rho(&x, &y, norm, 1e-9).unwrap();
            assert_eq!(d.solver, Solver::Newton);
            let radius = oracle_radius(&x, &y, norm);
            let o = rho_oracle(&x, &y, norm, radius, 200_001).unwrap();
            let res = oracle_resolution(&y, norm, radius, 200_001);
            assert!(d.value <= o + 1e-12 && o - d.value <= res, "p={p}");
        }
    }

    #[test]
    fn general_p_one_dimensional_closed_form() {
        // distance from e_1 to span{e_1 + e_2} in ℓp is 2^{1/p} / 2
        for p in [1.5, 3.0, 10.0] {
            let d = rho(&v(&[1.0, 0.0]), &line(&[1.0, 1.0]), NormSpec::new(p).unwrap(), 1e-10)
                .unwrap();
            assert!((d.value - 2f64.powf(1.0 / p) / 2.0).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn certificate_is_tight_for_lp() {
        let y = Subspace::span(4, &[v(&[1.0, 2.0, 0.0, -1.0]), v(&[0.0, 1.0, 1.0, 3.0])]).unwrap();
        let x = v(&[0.3, -2.0, 1.1, 0.7]);
        for norm in [NormSpec::L1, NormSpec::LINF] {
            let d = rho(&x, &y, norm, 1e-10).unwrap();
            assert!(d.achieved_tol < 1e-12, "{norm}: {}", d.achieved_tol);
        }
    }

    #[test]
    fn oracle_guards() {
        let x = v(&[1.0, 0.0, 0.0, 0.0]);
        let y = Subspace::full(4);
        assert!(matches!(
            rho_oracle(&x, &y, NormSpec::L1, 1.0, 10),
            Err(Error::RankTooLarge { rank: 4, max: 3 })
        ));
        assert_eq!(rho_oracle(&x, &Subspace::zero(4), NormSpec::L1, 1.0, 10).unwrap(), 1.0);
    }

    #[test]
    fn oracle_rank_three() {
        let y = Subspace::coordinate(4, 3).unwrap();
        let x = v(&[0.2, -0.4, 0.1, 0.5]);
        let o = rho_oracle(&x, &y, NormSpec::LINF, 1.0, 101).unwrap();
        assert!((o - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tolerance_and_dims() {
        let y = line(&[1.0, 1.0]);
        assert!(rho(&v(&[1.0, 0.0]), &y, NormSpec::L2, 0.0).is_err());
        assert!(rho(&v(&[1.0, 0.0, 0.0]), &y, NormSpec::L2, 1e-8).is_err());
    }
}
