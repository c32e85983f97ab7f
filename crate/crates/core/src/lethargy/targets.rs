use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the prescribed errors continue past the stored values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Zero,
    /// `d_{N+k} = d_N·r^k`, `0 < r < 1`.
    Geometric(f64),
}

/// A non-increasing sequence `d_1 ≥ d_2 ≥ … ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSequence {
    values: Vec<f64>,
    tail: Tail,
}

impl TargetSequence {
    pub fn new(values: Vec<f64>, tail: Tail) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidTargets(format!(
                    "d_{} = {v} must be finite and >= 0",
                    i + 1
                )));
            }
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidTargets(format!(
                "targets must be non-increasing, but d_{} = {} > d_{} = {}",
                i + 2,
                values[i + 1],
                i + 1,
                values[i]
            )));
        }
        if let Tail::Geometric(r) = tail {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidTargets(format!(
                    "geometric tail ratio must lie in (0, 1), got {r}"
                )));
            }
            if values.is_empty() {
                return Err(Error::InvalidTargets(
                    "geometric tail needs at least one stored value".into(),
                ));
            }
        }
        Ok(TargetSequence { values, tail })
    }

    pub fn finite(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Tail::Zero)
    }

    pub fn geometric(values: Vec<f64>, ratio: f64) -> Result<Self> {
        Self::new(values, Tail::Geometric(ratio))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// Number of stored values.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `d_n`, 1-based, tail included.
    pub fn get(&self, n: usize) -> f64 {
        assert!(n >= 1, "targets are indexed from 1");
        if n <= self.values.len() {
            return self.values[n - 1];
        }
        match self.tail {
            Tail::Zero => 0.0,
            Tail::Geometric(r) => {
                let last = *self.values.last().expect("checked at construction");
                last * r.powi((n - self.values.len()) as i32)
            }
        }
    }

    /// `d_1, …, d_n`.
    pub fn prefix(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.get(k)).collect()
    }

    /// Only finitely many non-zero terms.
    pub fn is_finitely_supported(&self) -> bool {
        matches!(self.tail, Tail::Zero) || self.values.last() == Some(&0.0)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }
}

/// Index of the last non-zero value among `d[..]` (1-based), 0 if none.
pub(crate) fn last_nonzero(d: &[f64]) -> usize {
    d.iter().rposition(|v| *v > 0.0).map_or(0, |i| i + 1)
}
