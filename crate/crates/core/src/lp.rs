//! Dense tableau simplex for the small linear programs behind ℓ1 / ℓ∞ distances.
//!
//! Problems come in standard form `min cᵀx, Ax = b, x >= 0` together with a
//! feasible starting basis, which the distance formulations can always supply,
//! so there is no phase one.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
/// Degenerate pivots tolerated under Dantzig's rule before switching to Bland's.
const DEGENERATE_STREAK: usize = 50;

#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct LpOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    /// `c_j - yᵀA_j` at the optimal basis.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

struct Tableau {
    n: usize,
    // m rows of n + 1 entries, rhs last
    t: Vec<f64>,
    z: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.n + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * (self.n + 1) + self.n]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.n + 1;
        let p = self.t[r * w + col];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        self.t[r * w + col] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * w);
        let (row, after) = rest.split_at_mut(w);
        for other in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = other[col];
            if f != 0.0 {
                for j in 0..w {
                    other[j] -= f * row[j];
                }
                other[col] = 0.0;
            }
        }
        let f = self.z[col];
        if f != 0.0 {
            for j in 0..w {
                self.z[j] -= f * row[j];
            }
            self.z[col] = 0.0;
        }
        self.basis[r] = col;
    }
}

/// Minimizes `cᵀx` subject to `Ax = b, x >= 0`; `a` is row-major `m × n`.
///
/// `start` lists one basic column per row (in any order) and must describe a
/// feasible basic solution.
pub(crate) fn minimize(
    a: &[f64],
    m: usize,
    n: usize,
    b: &[f64],
    c: &[f64],
    start: &[usize],
) -> Result<LpOutcome> {
    assert_eq!(a.len(), m * n);
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), n);
    assert_eq!(start.len(), m);

    let w = n + 1;
    let mut t = vec![0.0; m * w];
    for i in 0..m {
        t[i * w..i * w + n].copy_from_slice(&a[i * n..(i + 1) * n]);
        t[i * w + n] = b[i];
    }
    let mut z = vec![0.0; w];
    z[..n].copy_from_slice(c);
    let mut tab = Tableau {
        n,
        t,
        z,
        basis: vec![usize::MAX; m],
    };

    // bring the starting basis in, one column at a time
    let mut assigned = vec![false; m];
    for &col in start {
        let mut best = None;
        let mut best_abs = 0.0;
        for i in 0..m {
            if !assigned[i] && tab.at(i, col).abs() > best_abs {
                best_abs = tab.at(i, col).abs();
                best = Some(i);
            }
        }
        let r = best
            .filter(|_| best_abs > PIVOT_EPS)
            .ok_or_else(|| Error::Lp("starting basis is singular".into()))?;
        assigned[r] = true;
        tab.pivot(r, col);
    }
    let scale = b.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
    for i in 0..m {
        let v = tab.rhs(i);
        if v < -1e-9 * scale {
            return Err(Error::Lp(format!("starting basis infeasible (row {i}: {v:e})")));
        }
        if v < 0.0 {
            tab.t[i * w + n] = 0.0;
        }
    }

    let cost_eps = 1e-12 * c.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
    let max_iter = 50 * (m + n) + 1000;
    let mut streak = 0;
    let mut iterations = 0;
    loop {
        let bland = streak >= DEGENERATE_STREAK;
        let mut enter = None;
        let mut most = -cost_eps;
        for j in 0..n {
            if tab.z[j] < most {
                enter = Some(j);
                if bland {
                    break;
                }
                most = tab.z[j];
            }
        }
        let Some(col) = enter else { break };

        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let e = tab.at(i, col);
            if e > PIVOT_EPS {
                let ratio = tab.rhs(i) / e;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best_ratio - 1e-14 * best_ratio.abs().max(1.0)
                            || (ratio <= best_ratio + 1e-14 * best_ratio.abs().max(1.0)
                                && tab.basis[i] < tab.basis[l])
                    }
                };
                if better {
                    best_ratio = best_ratio.min(ratio);
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return Err(Error::Lp("objective is unbounded below".into()));
        };
        if best_ratio <= 1e-14 {
            streak += 1;
        } else {
            streak = 0;
        }
        tab.pivot(r, col);
        iterations += 1;
        if iterations > max_iter {
            return Err(Error::NonConvergence {
                solver: "simplex",
                iterations,
                value: -tab.z[n],
                gap: f64::NAN,
            });
        }
    }

    let mut x = vec![0.0; n];
    for i in 0..m {
        x[tab.basis[i]] = tab.rhs(i).max(0.0);
    }
    let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
    Ok(LpOutcome {
        x,
        objective,
        reduced_costs: tab.z[..n].to_vec(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  (optimum 36 at (2, 6))
        let a = [
            1.0, 0.0, 1.0, 0.0, 0.0, //
            0.0, 2.0, 0.0, 1.0, 0.0, //
            3.0, 2.0, 0.0, 0.0, 1.0,
        ];
        let b = [4.0, 12.0, 18.0];
        let c = [-3.0, -5.0, 0.0, 0.0, 0.0];
        let out = minimize(&a, 3, 5, &b, &c, &[2, 3, 4]).unwrap();
        assert!((out.objective + 36.0).abs() < 1e-12);
        assert!((out.x[0] - 2.0).abs() < 1e-12);
        assert!((out.x[1] - 6.0).abs() < 1e-12);
        // complementary slackness: basic columns have zero reduced cost
        assert!(out.reduced_costs[0].abs() < 1e-12 && out.reduced_costs[1].abs() < 1e-12);
        assert!(out.reduced_costs.iter().all(|r| *r > -1e-12));
    }

    #[test]
    fn detects_unbounded() {
        // min -x s.t. x - s = 1
        let out = minimize(&[1.0, -1.0], 1, 2, &[1.0], &[-1.0, 0.0], &[0]);
        assert!(matches!(out, Err(Error::Lp(_))));
    }

    #[test]
    fn rejects_infeasible_start() {
        let out = minimize(&[1.0, 1.0], 1, 2, &[-1.0], &[1.0, 1.0], &[0]);
        assert!(matches!(out, Err(Error::Lp(_))));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's cycling example in standard form
        let a = [
            0.25, -8.0, -1.0, 9.0, 1.0, 0.0, 0.0, //
            0.5, -12.0, -0.5, 3.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0,
        ];
        let b = [0.0, 0.0, 1.0];
        let c = [-0.75, 20.0, -0.5, 6.0, 0.0, 0.0, 0.0];
        let out = minimize(&a, 3, 7, &b, &c, &[4, 5, 6]).unwrap();
        assert!((out.objective + 1.25).abs() < 1e-12);
        assert!(out.iterations < 1000);
    }
}
