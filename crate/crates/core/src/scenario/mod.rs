//! Scenario files: a chain, a target sequence and what to do with them.
//!
//! Scenarios are TOML with `version = "1"`; unknown fields are rejected.

mod report;
mod run;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lethargy::{Tail, TargetSequence};
use crate::space::{Chain, NormSpec, Subspace, Vector};

pub use report::{
    emit, Check, CoefficientRow, Format, LevelRow, PrefixRow, Report, Stabilization, Verdict, EXIT_CODES,
};
pub use run::{run, RunOptions};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    CheckOnly,
    Finite,
    Prefix,
    Sequence,
}

/// `p ≥ 1` or the string `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormField {
    P(f64),
    Named(String),
}

impl NormField {
    pub fn resolve(&self) -> Result<NormSpec> {
        match self {
            NormField::P(p) => NormSpec::new(*p),
            NormField::Named(s) if s == "inf" => Ok(NormSpec::LINF),
            NormField::Named(s) => Err(Error::Scenario(format!("norm must be a number >= 1 or \"inf\", got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChainSpec {
    /// `Y_k = span{e_1, …, e_k}`, `k = 1..=levels`.
    Coordinate { levels: usize },
    /// Polynomials of the listed degrees sampled on `ambient_dim` equally
    /// spaced points of `[0, 1]`.
    PolynomialGrid { degrees: Vec<usize> },
    /// Spanning vectors for every level.
    Explicit { levels: Vec<Vec<Vec<f64>>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub values: Vec<f64>,
    #[serde(default = "zero_tail")]
    pub tail: Tail,
}

fn zero_tail() -> Tail {
    Tail::Zero
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceCheckSpec {
    pub k: usize,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Pass,
    Fail,
    InputError,
    SolverFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub ambient_dim: usize,
    pub norm: NormField,
    pub mode: Mode,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
    pub chain: ChainSpec,
    pub targets: TargetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace_check: Option<SubspaceCheckSpec>,
}

/// A scenario with its chain and targets built and validated.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub spec: Scenario,
    pub norm: NormSpec,
    pub chain: Chain,
    pub targets: TargetSequence,
}

impl LoadedScenario {
    /// Replaces the tolerance; `tol` must be positive and finite.
    pub fn set_tolerance(&mut self, tol: f64) -> Result<()> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidTolerance(tol));
        }
        self.spec.tolerance = tol;
        Ok(())
    }
}

/// Parses without building the chain, so fields like `expect` are readable
/// even when validation would fail.
pub fn parse_spec(text: &str) -> Result<Scenario> {
    toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
}

pub fn parse_scenario(text: &str) -> Result<LoadedScenario> {
    build(parse_spec(text)?)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn build(spec: Scenario) -> Result<LoadedScenario> {
    if spec.version != SCHEMA_VERSION {
        return Err(Error::Scenario(format!(
            "unsupported version {:?}, expected {SCHEMA_VERSION:?}",
            spec.version
        )));
    }
    if spec.ambient_dim == 0 {
        return Err(Error::Scenario("ambient_dim must be at least 1".into()));
    }
    if !(spec.tolerance > 0.0 && spec.tolerance.is_finite()) {
        return Err(Error::InvalidTolerance(spec.tolerance));
    }
    match spec.mode {
        Mode::Prefix if spec.n.is_none() => return Err(Error::Scenario("mode prefix needs field n".into())),
        Mode::Sequence if spec.n_max.is_none() => {
            return Err(Error::Scenario("mode sequence needs field n_max".into()))
        }
        _ => {}
    }
    let norm = spec.norm.resolve()?;
    let targets = TargetSequence::new(spec.targets.values.clone(), spec.targets.tail)?;
    let chain = build_chain(&spec.chain, spec.ambient_dim, norm)?;
    Ok(LoadedScenario {
        spec,
        norm,
        chain,
        targets,
    })
}

fn build_chain(spec: &ChainSpec, m: usize, norm: NormSpec) -> Result<Chain> {
    match spec {
        ChainSpec::Coordinate { levels } => Chain::coordinate(m, *levels, norm),
        ChainSpec::PolynomialGrid { degrees } => {
            if m < 2 {
                return Err(Error::Scenario("polynomial_grid needs at least 2 grid points".into()));
            }
            if let Some(&deg) = degrees.iter().find(|&&deg| deg >= m) {
                return Err(Error::Scenario(format!(
                    "degree {deg} needs more than {m} grid points"
                )));
            }
            let nodes: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
            let monomial = |j: usize| -> Result<Vector> { Vector::new(nodes.iter().map(|t| t.powi(j as i32)).collect()) };
            let levels = degrees
                .iter()
                .map(|&deg| {
                    let cols = (0..=deg).map(monomial).collect::<Result<Vec<_>>>()?;
                    Subspace::span(m, &cols)
                })
                .collect::<Result<Vec<_>>>()?;
            Chain::new(norm, levels)
        }
        ChainSpec::Explicit { levels } => {
            let levels = levels
                .iter()
                .map(|cols| {
                    let cols = cols.iter().map(|c| Vector::new(c.clone())).collect::<Result<Vec<_>>>()?;
                    Subspace::span(m, &cols)
                })
                .collect::<Result<Vec<_>>>()?;
            Chain::new(norm, levels)
        }
    }
}

/// The scenario library shipped with the crate, as `(file name, contents)`.
pub fn bundled() -> Vec<(&'static str, &'static str)> {
    vec![
        ("hilbert_coordinate.toml", include_str!("../../scenarios/hilbert_coordinate.toml")),
        ("hilbert_ties.toml", include_str!("../../scenarios/hilbert_ties.toml")),
        ("polynomial_grid.toml", include_str!("../../scenarios/polynomial_grid.toml")),
        ("skew_l1_prefix.toml", include_str!("../../scenarios/skew_l1_prefix.toml")),
        ("zero_tail.toml", include_str!("../../scenarios/zero_tail.toml")),
        ("geometric_half_fails.toml", include_str!("../../scenarios/geometric_half_fails.toml")),
        ("geometric_passes.toml", include_str!("../../scenarios/geometric_passes.toml")),
        ("step_span_condition.toml", include_str!("../../scenarios/step_span_condition.toml")),
        ("geometric_sequence.toml", include_str!("../../scenarios/geometric_sequence.toml")),
        ("dense_union.toml", include_str!("../../scenarios/dense_union.toml")),
    ]
}
