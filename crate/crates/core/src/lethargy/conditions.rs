use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::steps::normalize_step;
use super::targets::{Tail, TargetSequence};
use crate::distance::{default_tol, rho};
use crate::error::{Error, Result};
use crate::space::{Chain, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BorodinReport {
    pub passes: bool,
    /// Smallest `n0` with `d_n > Σ_{k>n} d_k` for every `n ≥ n0` where `d_n > 0`.
    pub n0: Option<usize>,
    /// `d_n − Σ_{k>n} d_k` for the stored `n`.
    pub margins: Vec<f64>,
    /// `1 − r/(1 − r)`: margin relative to `d_n` for every `n` in a geometric tail.
    pub tail_margin_factor: Option<f64>,
}

/// Tail sums are exact up to rounding: a reverse running sum over the stored
/// values, plus `d_N·r/(1 − r)` for a geometric continuation.
pub fn check_borodin_condition(d: &TargetSequence) -> BorodinReport {
    let vals = d.values();
    let n = vals.len();
    let (tail_sum, factor) = match d.tail() {
        Tail::Zero => (0.0, None),
        Tail::Geometric(r) => (vals[n - 1] * r / (1.0 - r), Some(1.0 - r / (1.0 - r))),
    };
    let mut margins = vec![0.0; n];
    let mut acc = tail_sum;
    for i in (0..n).rev() {
        margins[i] = vals[i] - acc;
        acc += vals[i];
    }
    let tail_ok = match factor {
        Some(f) => vals[n - 1] == 0.0 || f > 0.0,
        None => true,
    };
    if !tail_ok {
        return BorodinReport {
            passes: false,
            n0: None,
            margins,
            tail_margin_factor: factor,
        };
    }
    let last_bad = (0..n).rev().find(|&i| vals[i] > 0.0 && margins[i] <= 0.0);
    BorodinReport {
        passes: true,
        n0: Some(last_bad.map_or(1, |i| i + 2)),
        margins,
        tail_margin_factor: factor,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BorodinSchedule {
    /// `τ_1 = d_1`, `τ_j = min_{2≤k≤j} (d_{k−1} − d_k)`.
    pub tau: Vec<f64>,
    /// `u[n−1][j−1] = 1 + τ_n / (2^j d_j)` for `1 ≤ j ≤ n`.
    pub u: Vec<Vec<f64>>,
    /// All ones, same shape as `u`.
    pub v: Vec<Vec<f64>>,
}

impl BorodinSchedule {
    /// `u_n^{(j)}`, 1-based.
    pub fn u(&self, n: usize, j: usize) -> f64 {
        self.u[n - 1][j - 1]
    }

    pub fn is_sane(&self) -> bool {
        let tau_ok = self.tau.iter().all(|t| *t >= 0.0) && self.tau.windows(2).all(|w| w[1] <= w[0]);
        let uv_ok = self
            .u
            .iter()
            .zip(&self.v)
            .all(|(ur, vr)| ur.iter().zip(vr).all(|(u, v)| *v == 1.0 && u >= v));
        tau_ok && uv_ok
    }
}

pub fn build_schedule(d: &TargetSequence, n: usize) -> Result<BorodinSchedule> {
    let vals = d.prefix(n);
    if let Some(i) = vals.iter().position(|v| *v <= 0.0) {
        return Err(Error::InvalidTargets(format!(
            "schedule needs d_j > 0 for j <= {n}, but d_{} = 0",
            i + 1
        )));
    }
    let mut tau: Vec<f64> = Vec::with_capacity(n);
    for j in 1..=n {
        let t = match j {
            1 => vals[0],
            2 => vals[0] - vals[1],
            _ => tau[j - 2].min(vals[j - 2] - vals[j - 1]),
        };
        tau.push(t);
    }
    let u: Vec<Vec<f64>> = (1..=n)
        .map(|m| {
            (1..=m)
                .map(|j| 1.0 + tau[m - 1] / (2f64.powi(j as i32) * vals[j - 1]))
                .collect()
        })
        .collect();
    let v = u.iter().map(|r| vec![1.0; r.len()]).collect();
    Ok(BorodinSchedule { tau, u, v })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCheck {
    pub norm: f64,
    pub distance: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceConditionReport {
    pub k: usize,
    /// `d_{k−1} / d_k`.
    pub ratio: f64,
    pub samples: Vec<SampleCheck>,
    pub counterexamples: usize,
    /// A sampled check: `true` means no counterexample among the samples.
    pub no_counterexample: bool,
    pub summary: String,
}

/// Tests `‖q‖ ≤ (d_{k−1}/d_k)·ρ(q, Y_k)` on the given samples (`k ≥ 2`).
pub fn check_subspace_condition(
    chain: &Chain,
    d: &TargetSequence,
    q_samples: &[Vector],
    k: usize,
) -> Result<SubspaceConditionReport> {
    if k < 2 {
        return Err(Error::InvalidTargets("the ratio d_{k-1}/d_k needs k >= 2".into()));
    }
    let (dk1, dk) = (d.get(k - 1), d.get(k));
    if dk <= 0.0 {
        return Err(Error::InvalidTargets(format!("d_{k} = 0 leaves the ratio undefined")));
    }
    let yk = chain.require_level(k)?;
    let norm = chain.norm();
    let ratio = dk1 / dk;
    let mut samples = Vec::with_capacity(q_samples.len());
    for q in q_samples {
        let nq = q.norm(norm);
        let dist = rho(q, yk, norm, default_tol(norm))?.value;
        let bound = ratio * dist;
        samples.push(SampleCheck {
            norm: nq,
            distance: dist,
            bound,
            holds: nq <= bound + 1e-9 * nq.max(1.0),
        });
    }
    let counterexamples = samples.iter().filter(|s| !s.holds).count();
    let summary = if counterexamples == 0 {
        format!("no counterexample found among {} samples (sampled check)", samples.len())
    } else {
        format!(
            "{counterexamples} counterexample(s) among {} samples",
            samples.len()
        )
    };
    Ok(SubspaceConditionReport {
        k,
        ratio,
        samples,
        counterexamples,
        no_counterexample: counterexamples == 0,
        summary,
    })
}

/// Random non-zero combinations of the unit steps `q_k, q_{k+1}, …` of the chain.
pub fn step_span_samples(chain: &Chain, k: usize, count: usize, seed: u64) -> Result<Vec<Vector>> {
    let top = chain.max_level();
    if k >= top {
        return Err(Error::ChainTooShort {
            required: k + 1,
            available: top,
        });
    }
    let steps = (k..top)
        .map(|j| normalize_step(chain, j))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut q = Vector::zeros(chain.ambient_dim());
        for s in &steps {
            q = q.add_scaled(rng.gen_range(-1.0..1.0), s);
        }
        if q.norm(chain.norm()) > 1e-6 {
            out.push(q);
        }
    }
    Ok(out)
}
