//! Metric-preserving twists of a G2 structure.
//!
//! Every G2 form with the same metric and orientation as `φ` is
//!
//! ```text
//! φ̃ = (c² − |ω|²) φ + 2c *(ω ∧ φ) + 2 ω ∧ *(ω ∧ *φ),    c² + |ω|² = 1,
//! ```
//!
//! with `(c, ω)` unique up to `(c, ω) ~ (−c, −ω)`. This module evaluates the
//! map, its type decomposition, its inverse and its derivative along the
//! constraint sphere.

use serde_json::{json, Value};

use crate::error::{G2Error, Result};
use crate::exterior::{dx, norm_sq, wedge, KForm, Metric, DIM};
use crate::g2core::{decompose3, odot_inverse, Decomposition3, G2Structure};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Tolerance on `c² + |ω|² = 1` and on tangency.
pub const CONSTRAINT_TOL: f64 = 1e-12;
/// Largest accepted `|twist(recover(φ̃)) − φ̃|` in float mode.
pub const RECOVERY_TOL: f64 = 1e-9;
/// Below this `c`, float-mode recovery reads `ω` off the rank-one tensor
/// `ω ⊗ ω` instead of dividing the `Λ^3_7` part by `2c`.
const SMALL_C: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct TwistParams<S> {
    c: S,
    omega: KForm<S>,
}

impl<S: Scalar> TwistParams<S> {
    pub fn new(c: S, omega: KForm<S>, metric: &Metric<S>) -> Result<Self> {
        if omega.degree() != 1 {
            return Err(G2Error::DegreeMismatch { expected: 1, got: omega.degree() });
        }
        let p = TwistParams { c, omega };
        p.check_constraint(metric)?;
        Ok(p)
    }

    /// `(1, 0)`: the identity twist.
    pub fn identity() -> Self {
        TwistParams { c: S::one(), omega: KForm::zero(1) }
    }

    pub fn c(&self) -> &S {
        &self.c
    }

    pub fn omega(&self) -> &KForm<S> {
        &self.omega
    }

    /// `c² + |ω|² − 1`.
    pub fn constraint_residual(&self, metric: &Metric<S>) -> S {
        self.c.clone() * self.c.clone() + norm_sq(&self.omega, metric) - S::one()
    }

    pub fn check_constraint(&self, metric: &Metric<S>) -> Result<()> {
        let r = self.constraint_residual(metric);
        if r.is_zero_tol(CONSTRAINT_TOL) {
            Ok(())
        } else {
            Err(G2Error::ConstraintViolated { residual: r.to_f64().abs() })
        }
    }

    pub fn antipode(&self) -> Self {
        TwistParams { c: -self.c.clone(), omega: self.omega.neg() }
    }

    /// Canonical representative: `c > 0`, or when `c = 0` the first nonzero
    /// coefficient of `ω` is positive.
    pub fn canonical(&self, tol: f64) -> Self {
        let flip = if self.c.is_zero_tol(tol) {
            self.omega
                .coeffs()
                .iter()
                .find(|x| !x.is_zero_tol(tol))
                .is_some_and(|x| x.is_negative())
        } else {
            self.c.is_negative()
        };
        if flip {
            self.antipode()
        } else {
            self.clone()
        }
    }

    /// Equality modulo the antipode.
    pub fn equivalent(&self, other: &Self, tol: f64) -> bool {
        let same = |a: &Self, b: &Self| a.c.near(&b.c, tol) && a.omega.approx_eq(&b.omega, tol);
        same(self, other) || same(self, &other.antipode())
    }

    pub fn to_f64(&self) -> TwistParams<f64> {
        TwistParams { c: self.c.to_f64(), omega: self.omega.to_f64() }
    }

    pub fn to_json(&self) -> Value {
        json!({ "c": self.c.to_json(), "omega": self.omega.to_json() })
    }

    pub fn from_json(v: &Value, metric: &Metric<S>) -> Result<Self> {
        let c = S::from_json(v.get("c").ok_or_else(|| G2Error::Parse("missing c".into()))?)?;
        let omega = KForm::from_json(v.get("omega").ok_or_else(|| G2Error::Parse("missing omega".into()))?)?;
        Self::new(c, omega, metric)
    }
}

/// A tangent vector `(ċ, ω̇)` to the constraint sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistTangent<S> {
    pub cdot: S,
    pub omegadot: KForm<S>,
}

impl<S: Scalar> TwistTangent<S> {
    pub fn new(cdot: S, omegadot: KForm<S>) -> Result<Self> {
        if omegadot.degree() != 1 {
            return Err(G2Error::DegreeMismatch { expected: 1, got: omegadot.degree() });
        }
        Ok(TwistTangent { cdot, omegadot })
    }

    pub fn zero() -> Self {
        TwistTangent { cdot: S::zero(), omegadot: KForm::zero(1) }
    }

    /// `c ċ + <ω, ω̇>`.
    pub fn tangency_residual(&self, at: &TwistParams<S>, metric: &Metric<S>) -> S {
        let ip = crate::exterior::form_inner(&at.omega, &self.omegadot, metric).expect("1-forms");
        at.c.clone() * self.cdot.clone() + ip
    }
}

/// `ω ∧ *(ω' ∧ *φ)`.
fn omega_term<S: Scalar>(s: &G2Structure<S>, omega: &KForm<S>, other: &KForm<S>) -> Result<KForm<S>> {
    wedge(omega, &s.star(&wedge(other, s.psi())?))
}

/// `*(ω ∧ φ)`.
fn seven_term<S: Scalar>(s: &G2Structure<S>, omega: &KForm<S>) -> Result<KForm<S>> {
    Ok(s.star(&wedge(omega, s.phi())?))
}

/// The twisted form `φ̃(c, ω)`.
pub fn twist<S: Scalar>(s: &G2Structure<S>, p: &TwistParams<S>) -> Result<KForm<S>> {
    p.check_constraint(s.metric())?;
    let (c, w) = (p.c.clone(), &p.omega);
    let two = S::from_i64(2);
    let first = s.phi().scale(&(c.clone() * c.clone() - norm_sq(w, s.metric())));
    let second = seven_term(s, w)?.scale(&(two.clone() * c));
    let third = omega_term(s, w, w)?.scale(&two);
    Ok(first.add(&second).add(&third))
}

/// Type components of `φ̃(c, ω)` from closed-form expressions:
/// `p1 = (8c² − 1)/7 φ`, `p7 = 2c *(ω ∧ φ)`, `p27 = 2 π27(ω ∧ *(ω ∧ *φ))`.
pub fn twist_decomposed<S: Scalar>(s: &G2Structure<S>, p: &TwistParams<S>) -> Result<Decomposition3<S>> {
    p.check_constraint(s.metric())?;
    let (c, w) = (p.c.clone(), &p.omega);
    let two = S::from_i64(2);
    let f = (S::from_i64(8) * c.clone() * c.clone() - S::one()) / S::from_i64(7);
    let p1 = s.phi().scale(&f);
    let p7 = seven_term(s, w)?.scale(&(two.clone() * c));
    let p27 = decompose3(&omega_term(s, w, w)?, s)?.p27.scale(&two);
    let x = decompose3(&p7, s)?.x;
    Ok(Decomposition3 { p1, p7, p27, f, x })
}

/// Result of [`recover`]: canonical parameters and `max |twist(params) − φ̃|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Recovered<S> {
    pub params: TwistParams<S>,
    pub residual: f64,
}

impl<S: Scalar> Recovered<S> {
    pub fn to_json(&self) -> Value {
        let mut v = self.params.to_json();
        v["residual"] = json!(self.residual);
        v
    }
}

/// Inverts the twist map: finds canonical `(c, ω)` with `twist(s, (c, ω)) = φ̃`.
///
/// `c²` comes from the `Λ^3_1` coefficient. For `c ≠ 0`, `ω` solves
/// `2c *(ω ∧ φ) = π7(φ̃)`; for `c = 0` it is read off the rank-one tensor
/// `2 ω ⊗ ω`, rebuilt by inverting `⊙` on `π1(φ̃) + π27(φ̃)`.
pub fn recover<S: Scalar>(s: &G2Structure<S>, phit: &KForm<S>) -> Result<Recovered<S>> {
    let tol = s.tol();
    let (metric, orientation) = crate::g2core::metric_from_phi(phit, tol)?;
    let scale = s.metric().matrix().max_abs().max(1.0);
    if orientation != s.orientation() || !metric.matrix().approx_eq(s.metric().matrix(), tol * scale) {
        let residual = metric.matrix().sub(s.metric().matrix()).max_abs();
        return Err(G2Error::MetricMismatch { residual: if orientation != s.orientation() { f64::INFINITY } else { residual } });
    }
    let dec = decompose3(phit, s)?;

    let c_sq = (S::from_i64(7) * dec.f.clone() + S::one()) / S::from_i64(8);
    let c_sq = clamp_unit(c_sq, tol)?;
    let c = c_sq.sqrt_checked().ok_or_else(|| {
        G2Error::Inexact(format!("sqrt of c^2 = {c_sq} while recovering c"))
    })?;

    let use_seven_part = match S::MODE {
        crate::Mode::Exact => !c.is_zero(),
        crate::Mode::Float => c.to_f64() > SMALL_C,
    };
    let omega = if use_seven_part {
        omega_from_seven_part(s, &c, &dec.p7)?
    } else {
        omega_from_rank_one(s, &c_sq, &dec)?
    };

    let params = TwistParams { c, omega }.canonical(tol);
    let rebuilt = twist(s, &params)?;
    let residual = rebuilt.max_abs_diff(phit);
    let limit = match S::MODE {
        crate::Mode::Exact => 0.0,
        crate::Mode::Float => RECOVERY_TOL,
    };
    if residual > limit {
        return Err(G2Error::NoSolution { residual });
    }
    Ok(Recovered { params, residual })
}

fn clamp_unit<S: Scalar>(x: S, tol: f64) -> Result<S> {
    if x.is_negative() {
        if x.is_zero_tol(tol) {
            return Ok(S::zero());
        }
        return Err(G2Error::NoSolution { residual: x.to_f64().abs() });
    }
    let over = x.clone() - S::one();
    if over.is_positive() {
        if over.is_zero_tol(tol) {
            return Ok(S::one());
        }
        return Err(G2Error::NoSolution { residual: over.to_f64() });
    }
    Ok(x)
}

fn omega_from_seven_part<S: Scalar>(s: &G2Structure<S>, c: &S, p7: &KForm<S>) -> Result<KForm<S>> {
    let two_c = S::from_i64(2) * c.clone();
    let columns: Vec<Vec<S>> = (1..=DIM)
        .map(|i| seven_term(s, &dx(i)).map(|f| f.scale(&two_c).coeffs().to_vec()))
        .collect::<Result<_>>()?;
    let system = Mat::from_columns(35, &columns);
    let (w, _) = system.solve(p7.coeffs(), s.tol())?;
    Ok(KForm::one_form(&w))
}

fn omega_from_rank_one<S: Scalar>(s: &G2Structure<S>, c_sq: &S, dec: &Decomposition3<S>) -> Result<KForm<S>> {
    let tol = s.tol();
    // φ̃ − π7(φ̃) = ((c² − |ω|²)/3 g + 2 ω⊗ω) ⊙ φ with |ω|² = 1 − c²
    let sym = odot_inverse(&dec.p1.add(&dec.p27), s)?;
    let w_sq = S::one() - c_sq.clone();
    let trace_coeff = (c_sq.clone() - w_sq) / S::from_i64(3);
    let outer = sym
        .matrix()
        .sub(&s.metric().matrix().scale(&trace_coeff))
        .scale(&S::from_ratio(1, 2));

    let (k, top) = (0..DIM)
        .map(|i| (i, outer[(i, i)].clone()))
        .max_by(|a, b| a.1.to_f64().total_cmp(&b.1.to_f64()))
        .expect("nonempty");
    if !top.is_positive() || top.is_zero_tol(tol) {
        return Err(G2Error::NoSolution { residual: top.to_f64().abs() });
    }
    let root = top
        .sqrt_checked()
        .ok_or_else(|| G2Error::Inexact("sqrt of a diagonal entry of omega ⊗ omega".into()))?;
    let w: Vec<S> = (0..DIM).map(|j| outer[(k, j)].clone() / root.clone()).collect();

    let rank_one = Mat::from_fn(DIM, DIM, |i, j| w[i].clone() * w[j].clone());
    let defect = outer.sub(&rank_one).max_abs();
    if !outer.approx_eq(&rank_one, tol.max(RECOVERY_TOL)) {
        return Err(G2Error::NoSolution { residual: defect });
    }
    let mut omega = KForm::one_form(&w);
    // ω is only determined up to sign here; a nonzero c fixes it through π7
    if !c_sq.is_zero_tol(tol) {
        let c = c_sq.sqrt_checked().unwrap_or_else(S::zero);
        let guess = seven_term(s, &omega)?.scale(&(S::from_i64(2) * c));
        if s.inner(&guess, &dec.p7)?.is_negative() {
            omega = omega.neg();
        }
    }
    Ok(omega)
}

/// Derivative of the twist map along a curve through `p` with velocity `t`:
/// `4cċ φ + 2ċ *(ω ∧ φ) + 2c *(ω̇ ∧ φ) + 2 ω̇ ∧ *(ω ∧ *φ) + 2 ω ∧ *(ω̇ ∧ *φ)`.
pub fn twist_derivative<S: Scalar>(
    s: &G2Structure<S>,
    p: &TwistParams<S>,
    t: &TwistTangent<S>,
) -> Result<KForm<S>> {
    let r = t.tangency_residual(p, s.metric());
    if !r.is_zero_tol(CONSTRAINT_TOL) {
        return Err(G2Error::TangencyViolated { residual: r.to_f64().abs() });
    }
    twist_derivative_unchecked(s, p, t)
}

fn twist_derivative_unchecked<S: Scalar>(
    s: &G2Structure<S>,
    p: &TwistParams<S>,
    t: &TwistTangent<S>,
) -> Result<KForm<S>> {
    let two = S::from_i64(2);
    let (c, cdot) = (p.c.clone(), t.cdot.clone());
    let (w, wdot) = (&p.omega, &t.omegadot);
    let out = s
        .phi()
        .scale(&(S::from_i64(4) * c.clone() * cdot.clone()))
        .add(&seven_term(s, w)?.scale(&(two.clone() * cdot)))
        .add(&seven_term(s, wdot)?.scale(&(two.clone() * c)))
        .add(&omega_term(s, wdot, w)?.scale(&two))
        .add(&omega_term(s, w, wdot)?.scale(&two));
    Ok(out)
}

/// Rank of the derivative on the tangent space of the constraint sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeRank {
    pub rank: usize,
    /// Dimension of the tangent space (the rank of an injective derivative).
    pub tangent_dim: usize,
    /// Singular values of the derivative on an orthonormal tangent basis.
    pub singular_values: Vec<f64>,
}

impl DerivativeRank {
    pub fn is_injective(&self) -> bool {
        self.rank == self.tangent_dim
    }

    pub fn min_singular_value(&self) -> f64 {
        self.singular_values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// [`derivative_rank_in`] with `ω` ranging over `span{dx_1, …, dx_ambient}`.
pub fn derivative_rank<S: Scalar>(s: &G2Structure<S>, p: &TwistParams<S>, ambient_dim: usize) -> Result<DerivativeRank> {
    if !(1..=DIM).contains(&ambient_dim) {
        return Err(G2Error::Dimension(format!("ambient dimension {ambient_dim} not in 1..=7")));
    }
    let subspace: Vec<KForm<S>> = (1..=ambient_dim).map(dx).collect();
    derivative_rank_in(s, p, &subspace)
}

/// Rank of `t ↦ twist_derivative(s, p, t)` on the tangent space at `p` of the
/// sphere `c² + |ω|² = 1` inside `R × span(subspace)`.
pub fn derivative_rank_in<S: Scalar>(
    s: &G2Structure<S>,
    p: &TwistParams<S>,
    subspace: &[KForm<S>],
) -> Result<DerivativeRank> {
    p.check_constraint(s.metric())?;
    let d = subspace.len();
    // tangent space = kernel of (ċ, a) ↦ c ċ + <ω, Σ a_k w_k>
    let functional = Mat::from_fn(1, d + 1, |_, j| {
        if j == 0 {
            p.c.clone()
        } else {
            s.inner(&p.omega, &subspace[j - 1]).expect("1-forms")
        }
    });
    let tangent_basis = functional.nullspace(CONSTRAINT_TOL);
    let to_tangent = |v: &[S]| {
        let omegadot = subspace
            .iter()
            .zip(&v[1..])
            .fold(KForm::zero(1), |acc, (w, a)| acc.add(&w.scale(a)));
        TwistTangent { cdot: v[0].clone(), omegadot }
    };
    let columns: Vec<Vec<S>> = tangent_basis
        .iter()
        .map(|v| twist_derivative_unchecked(s, p, &to_tangent(v)).map(|f| f.coeffs().to_vec()))
        .collect::<Result<_>>()?;
    let image = Mat::from_columns(35, &columns);
    let rank = image.rank();

    // singular values on a Gram–Schmidt orthonormalized tangent basis
    let g_inv = s.metric().inverse().to_f64();
    let w: Vec<Vec<f64>> = subspace.iter().map(|f| f.coeffs().iter().map(Scalar::to_f64).collect()).collect();
    let gram = Mat::from_fn(d, d, |i, j| {
        let gw = g_inv.mul_vec(&w[j]);
        w[i].iter().zip(&gw).map(|(a, b)| a * b).sum::<f64>()
    });
    let ip = |a: &[f64], b: &[f64]| {
        let rest: f64 = (0..d).map(|i| (0..d).map(|j| a[i + 1] * gram[(i, j)] * b[j + 1]).sum::<f64>()).sum();
        a[0] * b[0] + rest
    };
    let raw: Vec<Vec<f64>> = tangent_basis.iter().map(|v| v.iter().map(Scalar::to_f64).collect()).collect();
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let mut ortho_images: Vec<Vec<f64>> = Vec::new();
    for (v, img) in raw.iter().zip(&columns) {
        let mut v = v.clone();
        let mut img: Vec<f64> = img.iter().map(Scalar::to_f64).collect();
        for (u, uimg) in ortho.iter().zip(&ortho_images) {
            let k = ip(&v, u);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= k * y);
            img.iter_mut().zip(uimg).for_each(|(x, y)| *x -= k * y);
        }
        let n = ip(&v, &v).sqrt();
        if n > 0.0 {
            ortho.push(v.iter().map(|x| x / n).collect());
            ortho_images.push(img.iter().map(|x| x / n).collect());
        }
    }
    let singular_values = Mat::from_columns(35, &ortho_images).singular_values();
    Ok(DerivativeRank { rank, tangent_dim: tangent_basis.len(), singular_values })
}
