//! Linear functionals on (R^m, ℓp), represented by dual vectors.

use nalgebra::{DMatrix, DVector};

use crate::distance::{default_tol, rho};
use crate::error::{Error, Result};
use crate::space::{NormSpec, Subspace, Vector};

pub const FUNC_TOL: f64 = 1e-8;
/// Doubling budget for [`limit_value`].
pub const LIMIT_DOUBLINGS: usize = 60;

/// Solver tolerance for the distance calls inside this module.
fn inner_tol(norm: NormSpec) -> f64 {
    default_tol(norm).min(1e-10)
}

/// `f(x) = ⟨dual_vector, x⟩`.
#[derive(Clone, Debug)]
pub struct Functional {
    dual_vector: Vector,
    dual_norm_value: f64,
    kernel_basis: Subspace,
}

impl Functional {
    /// Wraps a dual vector; `norm` is the norm on the primal side.
    pub fn new(dual_vector: Vector, norm: NormSpec) -> Self {
        let dual_norm_value = dual_vector.norm(norm.dual());
        let line = if dual_vector.is_zero() {
            Subspace::zero(dual_vector.dim())
        } else {
            Subspace::span(dual_vector.dim(), std::slice::from_ref(&dual_vector))
                .expect("non-zero vector spans a line")
        };
        Functional {
            dual_vector,
            dual_norm_value,
            kernel_basis: line.complement(),
        }
    }

    pub fn apply(&self, x: &Vector) -> f64 {
        self.dual_vector.dot(x)
    }

    pub fn dual_vector(&self) -> &Vector {
        &self.dual_vector
    }

    /// Operator norm under the conjugate exponent of the norm it was built for.
    pub fn dual_norm_value(&self) -> f64 {
        self.dual_norm_value
    }

    /// Orthonormal basis of `ker f`.
    pub fn kernel_basis(&self) -> &Subspace {
        &self.kernel_basis
    }
}

fn distance_to_q(x1: &Vector, q: &Subspace, norm: NormSpec) -> Result<f64> {
    let r1 = rho(x1, q, norm, inner_tol(norm))?.value;
    if r1 <= FUNC_TOL * x1.norm(norm).max(1.0) {
        return Err(Error::Degenerate(format!(
            "x1 lies in Q (ρ(x1, Q) = {r1:e})"
        )));
    }
    Ok(r1)
}

fn g(x2: &Vector, x1: &Vector, q: &Subspace, norm: NormSpec, r1: f64, a: f64) -> Result<f64> {
    let shifted = x2.add_scaled(-a, x1);
    Ok(a - rho(&shifted, q, norm, inner_tol(norm))?.value / r1)
}

/// `g(a) = a − ρ(x2 − a·x1, Q) / ρ(x1, Q)`, non-decreasing in `a`.
pub fn limit_expression(
    x2: &Vector,
    x1: &Vector,
    q: &Subspace,
    norm: NormSpec,
    a: f64,
) -> Result<f64> {
    x1.check_dim(q.ambient_dim())?;
    x2.check_dim(q.ambient_dim())?;
    let r1 = distance_to_q(x1, q, norm)?;
    g(x2, x1, q, norm, r1, a)
}

/// `lim_{a→∞} g(a)`.
///
/// Doubles `a` from `max(1, ‖x2‖/‖x1‖)` until successive values differ by
/// less than `rel_tol·max(1, |g|)`, then returns `g(2a) + (g(2a) − g(a))`:
/// `g` approaches its limit like `1/a` for smooth norms, so one Richardson
/// step removes the leading error term. Polyhedral norms reach the limit at
/// finite `a`, where the correction is zero.
pub fn limit_value(
    x2: &Vector,
    x1: &Vector,
    q: &Subspace,
    norm: NormSpec,
    rel_tol: f64,
) -> Result<f64> {
    x1.check_dim(q.ambient_dim())?;
    x2.check_dim(q.ambient_dim())?;
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidTolerance(rel_tol));
    }
    let r1 = distance_to_q(x1, q, norm)?;
    let bound = rho(x2, q, norm, inner_tol(norm))?.value / r1;
    let mut a = (x2.norm(norm) / x1.norm(norm)).max(1.0);
    let mut ga = g(x2, x1, q, norm, r1, a)?;
    for _ in 0..LIMIT_DOUBLINGS {
        let g2 = g(x2, x1, q, norm, r1, 2.0 * a)?;
        let inc = g2 - ga;
        if inc.abs() < rel_tol * ga.abs().max(1.0) {
            return Ok((g2 + inc).clamp(-bound, bound));
        }
        a *= 2.0;
        ga = g2;
    }
    Err(Error::NonConvergence {
        solver: "limit doubling",
        iterations: LIMIT_DOUBLINGS,
        value: ga,
        gap: bound - ga,
    })
}

/// Minimal-dual-norm functional with `f|Q = 0`, `f(x1) = 1`, and, when `x2`
/// is given, `f(x2) = limit_value(x2, x1, Q)`.
///
/// The constraints are affine in the dual vector `h`; with `h0` their
/// minimal Euclidean solution and `N` an orthonormal basis of the directions
/// they leave free, the minimal `‖h‖_q` is the distance from `h0` to `span N`
/// under the conjugate norm.
pub fn norming_functional(
    x1: &Vector,
    q: &Subspace,
    norm: NormSpec,
    x2: Option<&Vector>,
) -> Result<Functional> {
    x1.check_dim(q.ambient_dim())?;
    let m = q.ambient_dim();
    let r1 = distance_to_q(x1, q, norm)?;

    let mut cols: Vec<Vector> = (0..q.rank()).map(|j| q.column(j)).collect();
    let mut rhs = vec![0.0; q.rank()];
    cols.push(x1.clone());
    rhs.push(1.0);
    if let Some(x2) = x2 {
        x2.check_dim(m)?;
        let span = q.extended(std::slice::from_ref(x1))?;
        let res = span.residual(x2);
        if res <= 1e-10 {
            return Err(Error::Degenerate(format!(
                "x2 lies in span(Q ∪ {{x1}}) (relative residual {res:e})"
            )));
        }
        rhs.push(limit_value(x2, x1, q, norm, FUNC_TOL)?);
        cols.push(x2.clone());
    }

    let c = DMatrix::from_fn(m, cols.len(), |i, j| cols[j][i]);
    let b = DVector::from_vec(rhs);
    let h0 = c
        .transpose()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    let h0 = Vector::from_dvector(h0);
    let free = Subspace::span(m, &cols)?.complement();
    let dual = norm.dual();
    let h = if free.rank() == 0 {
        h0
    } else {
        let d = rho(&h0, &free, dual, inner_tol(dual))?;
        h0.sub(&free.combine(&d.witness_coeffs))
    };

    let f = Functional::new(h, norm);
    let product = f.dual_norm_value() * r1;
    if (product - 1.0).abs() > 100.0 * FUNC_TOL {
        return Err(Error::NormMismatch { product });
    }
    Ok(f)
}

fn dual_norm_for(f: &Functional, norm: NormSpec) -> f64 {
    f.dual_vector().norm(norm.dual())
}

/// `|f(x)| ≥ (1 − tol)·‖f‖·‖x‖`, with `‖f‖` taken in the dual of `norm`.
pub fn norm_attainment_check(f: &Functional, x: &Vector, norm: NormSpec, tol: f64) -> bool {
    f.apply(x).abs() >= (1.0 - tol) * dual_norm_for(f, norm) * x.norm(norm)
}

/// `ρ(x, ker f) = |f(x)| / ‖f‖` to within `tol`.
pub fn kernel_distance_identity_check(
    f: &Functional,
    x: &Vector,
    norm: NormSpec,
    tol: f64,
) -> Result<bool> {
    let dn = dual_norm_for(f, norm);
    if dn == 0.0 {
        return Err(Error::Degenerate("zero functional".into()));
    }
    let d = rho(x, f.kernel_basis(), norm, inner_tol(norm))?.value;
    Ok((d - f.apply(x).abs() / dn).abs() <= tol)
}
