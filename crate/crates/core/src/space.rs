//! Vectors, ℓp norms, finite-dimensional subspaces and nested chains of them.

use std::fmt;
use std::ops::Index;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value cutoff used for numerical rank.
pub const RANK_TOL: f64 = 1e-10;
/// Relative residual allowed when checking that one level sits inside the next.
pub const NEST_TOL: f64 = 1e-10;

/// A point of R^m with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector(DVector<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Vector(DVector::from_vec(entries)))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(DVector::zeros(dim))
    }

    /// The `i`-th standard basis vector (0-based).
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        Vector(v)
    }

    pub(crate) fn from_dvector(v: DVector<f64>) -> Self {
        Vector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn norm(&self, norm: NormSpec) -> f64 {
        norm.eval(self.as_slice())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(&self.0 * s)
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &Vector) -> Vector {
        Vector(&self.0 + &other.0 * s)
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(&self.0 - &other.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The ℓp norm on R^m, `p` in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    p: f64,
}

impl NormSpec {
    pub const L1: NormSpec = NormSpec { p: 1.0 };
    pub const L2: NormSpec = NormSpec { p: 2.0 };
    pub const LINF: NormSpec = NormSpec { p: f64::INFINITY };

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidNorm(p));
        }
        Ok(NormSpec { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_l1(&self) -> bool {
        self.p == 1.0
    }

    pub fn is_l2(&self) -> bool {
        self.p == 2.0
    }

    pub fn is_linf(&self) -> bool {
        self.p.is_infinite()
    }

    /// Conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn dual(&self) -> NormSpec {
        if self.is_l1() {
            NormSpec::LINF
        } else if self.is_linf() {
            NormSpec::L1
        } else {
            NormSpec {
                p: self.p / (self.p - 1.0),
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.is_linf() {
            return x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        }
        if self.is_l1() {
            return x.iter().map(|v| v.abs()).sum();
        }
        // scale by the largest entry so large p cannot overflow
        let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        if self.is_l2() {
            return m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt();
        }
        m * x
            .iter()
            .map(|v| (v.abs() / m).powf(self.p))
            .sum::<f64>()
            .powf(1.0 / self.p)
    }

    /// Short label: `"1"`, `"2"`, `"1.5"`, `"inf"`.
    pub fn label(&self) -> String {
        if self.is_linf() {
            "inf".to_string()
        } else {
            format!("{}", self.p)
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.label())
    }
}

pub fn norm_eval(x: &Vector, norm: NormSpec) -> f64 {
    norm.eval(x.as_slice())
}

/// A linear subspace of R^m given by a basis.
///
/// The caller's basis is kept as given; an orthonormal basis of the same span
/// (Householder QR, so column `j` spans the first `j + 1` given columns) is
/// what the solvers work with. Witness coefficients always refer to it.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
    original: DMatrix<f64>,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
            original: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        let id = DMatrix::identity(ambient_dim, ambient_dim);
        Subspace {
            ambient_dim,
            basis: id.clone(),
            original: id,
        }
    }

    /// Span of the first `k` standard basis vectors.
    pub fn coordinate(ambient_dim: usize, k: usize) -> Result<Self> {
        if k > ambient_dim {
            return Err(Error::RankDeficient {
                columns: k,
                rank: ambient_dim,
            });
        }
        let m = DMatrix::identity(ambient_dim, ambient_dim)
            .columns(0, k)
            .into_owned();
        Ok(Subspace {
            ambient_dim,
            basis: m.clone(),
            original: m,
        })
    }

    pub fn span(ambient_dim: usize, columns: &[Vector]) -> Result<Self> {
        Self::span_with_tol(ambient_dim, columns, RANK_TOL)
    }

    pub fn span_with_tol(ambient_dim: usize, columns: &[Vector], rank_tol: f64) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::EmptyVector);
        }
        for c in columns {
            c.check_dim(ambient_dim)?;
        }
        let k = columns.len();
        if k == 0 {
            return Ok(Self::zero(ambient_dim));
        }
        let original = DMatrix::from_fn(ambient_dim, k, |i, j| columns[j][i]);
        let rank = numerical_rank(&original, rank_tol);
        if rank < k {
            return Err(Error::RankDeficient { columns: k, rank });
        }
        let basis = orthonormalize(&original);
        Ok(Subspace {
            ambient_dim,
            basis,
            original,
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Orthonormal basis, one column per dimension.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn original_basis(&self) -> &DMatrix<f64> {
        &self.original
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector(self.basis.column(j).into_owned())
    }

    pub fn original_column(&self, j: usize) -> Vector {
        Vector(self.original.column(j).into_owned())
    }

    /// `sum_j coeffs[j] * basis_j` over the orthonormal basis.
    pub fn combine(&self, coeffs: &[f64]) -> Vector {
        assert_eq!(coeffs.len(), self.rank(), "coefficient count != rank");
        if coeffs.is_empty() {
            return Vector::zeros(self.ambient_dim);
        }
        Vector(&self.basis * DVector::from_column_slice(coeffs))
    }

    /// Euclidean orthogonal projection onto the subspace.
    pub fn project(&self, x: &Vector) -> Vector {
        if self.rank() == 0 {
            return Vector::zeros(self.ambient_dim);
        }
        let c = self.basis.tr_mul(&x.0);
        Vector(&self.basis * c)
    }

    /// Orthonormal basis of the Euclidean orthogonal complement.
    pub fn complement(&self) -> Subspace {
        let m = self.ambient_dim;
        let r = self.rank();
        if r == 0 {
            return Self::full(m);
        }
        if r == m {
            return Self::zero(m);
        }
        let mut aug = DMatrix::zeros(m, r + m);
        aug.columns_mut(0, r).copy_from(&self.basis);
        aug.columns_mut(r, m).fill_with_identity();
        let q = aug.qr().q();
        let comp = q.columns(r, m - r).into_owned();
        Subspace {
            ambient_dim: m,
            basis: comp.clone(),
            original: comp,
        }
    }

    /// The span of this subspace together with `extra`.
    pub fn extended(&self, extra: &[Vector]) -> Result<Subspace> {
        let mut cols: Vec<Vector> = (0..self.rank()).map(|j| self.original_column(j)).collect();
        cols.extend(extra.iter().cloned());
        Subspace::span(self.ambient_dim, &cols)
    }

    /// Relative Euclidean residual of `x` after projection, `‖x - Px‖ / max(1, ‖x‖)`.
    pub fn residual(&self, x: &Vector) -> f64 {
        let r = x.sub(&self.project(x));
        r.0.norm() / x.0.norm().max(1.0)
    }
}

/// Whether `x` lies in `y` up to a relative Euclidean residual `tol`.
pub fn contains(y: &Subspace, x: &Vector, tol: f64) -> Result<bool> {
    x.check_dim(y.ambient_dim())?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    Ok(y.residual(x) <= tol)
}

pub(crate) fn numerical_rank(m: &DMatrix<f64>, rank_tol: f64) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rank_tol * smax).count()
}

fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut q = m.clone().qr().q();
    // fix signs so column j has a positive component along the j-th input
    for j in 0..q.ncols() {
        if q.column(j).dot(&m.column(j)) < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    // one reorthogonalization pass keeps ‖QᵀQ - I‖ at roundoff level
    let q2 = q.clone().qr().q();
    let mut out = q2;
    for j in 0..out.ncols() {
        if out.column(j).dot(&q.column(j)) < 0.0 {
            out.column_mut(j).neg_mut();
        }
    }
    out
}

/// One adjacent pair of levels as seen by [`validate_chain`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelPair {
    pub lower: usize,
    pub upper: usize,
    pub rank_lower: usize,
    pub rank_upper: usize,
    pub max_residual: f64,
    pub nested: bool,
    pub strict: bool,
}

impl LevelPair {
    pub fn ok(&self) -> bool {
        self.nested && self.strict
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pairs: Vec<LevelPair>,
    pub dimension_errors: Vec<String>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn first_failure(&self) -> Option<&LevelPair> {
        self.pairs.iter().find(|p| !p.ok())
    }
}

/// Checks `Y_1 ⊊ Y_2 ⊊ …` pairwise. Levels are numbered from 1.
pub fn validate_chain(levels: &[Subspace]) -> ValidationReport {
    let mut dimension_errors = Vec::new();
    if let Some(first) = levels.first() {
        let m = first.ambient_dim();
        for (i, l) in levels.iter().enumerate() {
            if l.ambient_dim() != m {
                dimension_errors.push(format!(
                    "level {} lives in R^{} but level 1 lives in R^{}",
                    i + 1,
                    l.ambient_dim(),
                    m
                ));
            }
        }
    }
    let mut pairs = Vec::new();
    if dimension_errors.is_empty() {
        for (i, w) in levels.windows(2).enumerate() {
            let (lo, hi) = (&w[0], &w[1]);
            let max_residual = (0..lo.rank())
                .map(|j| {
                    let b = lo.original_column(j);
                    let r = b.sub(&hi.project(&b));
                    r.0.norm() / b.0.norm().max(1.0)
                })
                .fold(0.0_f64, f64::max);
            pairs.push(LevelPair {
                lower: i + 1,
                upper: i + 2,
                rank_lower: lo.rank(),
                rank_upper: hi.rank(),
                max_residual,
                nested: max_residual <= NEST_TOL,
                strict: hi.rank() > lo.rank(),
            });
        }
    }
    let passed = dimension_errors.is_empty() && pairs.iter().all(LevelPair::ok);
    ValidationReport {
        pairs,
        dimension_errors,
        passed,
    }
}

/// A strictly increasing chain `Y_1 ⊊ … ⊊ Y_L` in R^m with a fixed norm.
///
/// Level 0 is `{0}`. When `Y_L` is a proper subspace, level `L + 1` is the
/// whole space, so every stored level has a successor to step into.
#[derive(Clone, Debug)]
pub struct Chain {
    norm: NormSpec,
    levels: Vec<Subspace>,
    zero: Subspace,
    ambient: Option<Subspace>,
}

impl Chain {
    pub fn new(norm: NormSpec, levels: Vec<Subspace>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::ChainTooShort {
                required: 1,
                available: 0,
            });
        }
        let report = validate_chain(&levels);
        if let Some(msg) = report.dimension_errors.first() {
            return Err(Error::InvalidChain {
                lower: 0,
                upper: 0,
                reason: msg.clone(),
            });
        }
        if let Some(p) = report.first_failure() {
            let reason = if !p.nested {
                format!("relative residual {:.3e} exceeds {:.0e}", p.max_residual, NEST_TOL)
            } else {
                format!("rank does not increase ({} -> {})", p.rank_lower, p.rank_upper)
            };
            return Err(Error::InvalidChain {
                lower: p.lower,
                upper: p.upper,
                reason,
            });
        }
        let m = levels[0].ambient_dim();
        let ambient = if levels.last().map(Subspace::rank) == Some(m) {
            None
        } else {
            Some(Subspace::full(m))
        };
        Ok(Chain {
            norm,
            levels,
            zero: Subspace::zero(m),
            ambient,
        })
    }

    /// `Y_k = span{e_1, …, e_k}` for `k = 1..=depth`.
    pub fn coordinate(ambient_dim: usize, depth: usize, norm: NormSpec) -> Result<Self> {
        let levels = (1..=depth)
            .map(|k| Subspace::coordinate(ambient_dim, k))
            .collect::<Result<Vec<_>>>()?;
        Chain::new(norm, levels)
    }

    pub fn norm(&self) -> NormSpec {
        self.norm
    }

    pub fn ambient_dim(&self) -> usize {
        self.zero.ambient_dim()
    }

    /// Number of caller-supplied levels.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Subspace] {
        &self.levels
    }

    /// Highest addressable level, counting the whole-space extension.
    pub fn max_level(&self) -> usize {
        self.depth() + usize::from(self.ambient.is_some())
    }

    pub fn level(&self, k: usize) -> Option<&Subspace> {
        if k == 0 {
            Some(&self.zero)
        } else if k <= self.depth() {
            Some(&self.levels[k - 1])
        } else if k == self.depth() + 1 {
            self.ambient.as_ref()
        } else {
            None
        }
    }

    pub(crate) fn require_level(&self, k: usize) -> Result<&Subspace> {
        self.level(k).ok_or(Error::ChainTooShort {
            required: k,
            available: self.max_level(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn norm_examples() {
        let x = v(&[3.0, -4.0]);
        assert_eq!(norm_eval(&x, NormSpec::L1), 7.0);
        assert_eq!(norm_eval(&x, NormSpec::L2), 5.0);
        assert_eq!(norm_eval(&x, NormSpec::LINF), 4.0);
    }

    #[test]
    fn general_p_matches_direct_formula() {
        let x = [0.3, -1.2, 2.5, 0.0];
        for p in [1.5, 3.0, 7.0] {
            let direct: f64 = x.iter().map(|a: &f64| a.abs().powf(p)).sum::<f64>().powf(1.0 / p);
            let got = NormSpec::new(p).unwrap().eval(&x);
            assert!((got - direct).abs() < 1e-14 * direct);
        }
    }

    #[test]
    fn huge_entries_do_not_overflow() {
        let x = [1e300, 1e300];
        let n = NormSpec::new(3.0).unwrap().eval(&x);
        assert!((n / 1e300 - 2f64.powf(1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn dual_exponents() {
        assert_eq!(NormSpec::L1.dual(), NormSpec::LINF);
        assert_eq!(NormSpec::LINF.dual(), NormSpec::L1);
        assert_eq!(NormSpec::L2.dual(), NormSpec::L2);
        assert!((NormSpec::new(3.0).unwrap().dual().p() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(Vector::new(vec![]), Err(Error::EmptyVector)));
        assert!(matches!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(NormSpec::new(0.5).is_err());
        assert!(NormSpec::new(f64::NAN).is_err());
        let e = Subspace::span(2, &[v(&[1.0, 1.0]), v(&[2.0, 2.0])]);
        assert!(matches!(e, Err(Error::RankDeficient { columns: 2, rank: 1 })));
    }

    #[test]
    fn orthonormal_basis_keeps_flag_order() {
        let y = Subspace::span(3, &[v(&[2.0, 0.0, 0.0]), v(&[1.0, 1.0, 0.0])]).unwrap();
        let q = y.basis();
        assert!((q.column(0) - DVector::from_vec(vec![1.0, 0.0, 0.0])).norm() < 1e-15);
        assert!((q.column(1) - DVector::from_vec(vec![0.0, 1.0, 0.0])).norm() < 1e-15);
        let gram = q.transpose() * q;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn complement_is_orthogonal() {
        let y = Subspace::span(4, &[v(&[1.0, 2.0, 0.0, 1.0]), v(&[0.0, 1.0, 1.0, 1.0])]).unwrap();
        let c = y.complement();
        assert_eq!(c.rank(), 2);
        assert!((y.basis().transpose() * c.basis()).norm() < 1e-14);
        assert_eq!(Subspace::zero(3).complement().rank(), 3);
        assert_eq!(Subspace::full(3).complement().rank(), 0);
    }

    #[test]
    fn contains_examples() {
        let y = Subspace::span(3, &[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap();
        assert!(contains(&y, &v(&[3.0, -2.0, 0.0]), 1e-12).unwrap());
        assert!(!contains(&y, &v(&[0.0, 0.0, 1e-6]), 1e-12).unwrap());
        assert!(contains(&y, &v(&[1.0, 1.0]), 1e-12).is_err());
        assert!(contains(&Subspace::zero(3), &Vector::zeros(3), 1e-12).unwrap());
    }

    #[test]
    fn validate_chain_flags_repeated_level() {
        let l1 = Subspace::coordinate(3, 1).unwrap();
        let l2 = Subspace::coordinate(3, 2).unwrap();
        let rep = validate_chain(&[l1.clone(), l2.clone(), l2.clone()]);
        assert!(!rep.passed);
        let f = rep.first_failure().unwrap();
        assert_eq!((f.lower, f.upper), (2, 3));
        assert!(f.nested && !f.strict);
        assert!(validate_chain(&[l1.clone(), l2.clone()]).passed);
        assert!(matches!(
            Chain::new(NormSpec::L2, vec![l1, l2.clone(), l2]),
            Err(Error::InvalidChain { lower: 2, upper: 3, .. })
        ));
    }

    #[test]
    fn validate_chain_flags_non_nested() {
        let a = Subspace::span(3, &[v(&[1.0, 0.0, 0.0])]).unwrap();
        let b = Subspace::span(3, &[v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])]).unwrap();
        let rep = validate_chain(&[a, b]);
        let f = rep.first_failure().unwrap();
        assert!(!f.nested);
        assert!((f.max_residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validate_chain_flags_dimension_mismatch() {
        let rep = validate_chain(&[Subspace::coordinate(2, 1).unwrap(), Subspace::coordinate(3, 2).unwrap()]);
        assert!(!rep.passed);
        assert_eq!(rep.dimension_errors.len(), 1);
    }

    #[test]
    fn chain_levels_are_extended() {
        let c = Chain::coordinate(3, 2, NormSpec::L2).unwrap();
        assert_eq!(c.depth(), 2);
        assert_eq!(c.max_level(), 3);
        assert_eq!(c.level(0).unwrap().rank(), 0);
        assert_eq!(c.level(3).unwrap().rank(), 3);
        assert!(c.level(4).is_none());
        let full = Chain::coordinate(2, 2, NormSpec::L2).unwrap();
        assert_eq!(full.max_level(), 2);
    }

    #[test]
    fn zero_first_level_is_allowed() {
        let c = Chain::new(
            NormSpec::L1,
            vec![Subspace::zero(2), Subspace::coordinate(2, 1).unwrap()],
        )
        .unwrap();
        assert_eq!(c.level(1).unwrap().rank(), 0);
    }
}
