//! Flat models: the torus `T^7`, `S^1 × CY3` and `T^3 × K3`, taken pointwise
//! with constant-coefficient forms.
//!
//! Coordinates are `x1 = θ` (or `x1, x2, x3` on the torus factor) and
//! `z_k = x_{2k} + i x_{2k+1}`. Harmonic 1-forms on these models are the
//! constant forms in the first `b¹` coordinate directions.

use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::bryant::{derivative_rank_in, recover, twist, DerivativeRank, TwistParams};
use crate::error::{G2Error, Result};
use crate::exterior::{dx, form_inner, pullback, wedge, KForm, DIM};
use crate::g2core::G2Structure;
use crate::liegroup::HolonomySpec;
use crate::linalg::{expm, Mat};
use crate::sampling::{rational_twist_point, rng, random_unit_cube};
use crate::scalar::Scalar;

/// Tolerance on the part of a recovered `ω` outside the model's directions.
pub const SUBSPACE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FlatModel {
    T7,
    S1xCY3,
    T3xK3,
}

impl FlatModel {
    pub const ALL: [FlatModel; 3] = [FlatModel::T7, FlatModel::S1xCY3, FlatModel::T3xK3];

    pub fn b1(self) -> usize {
        match self {
            FlatModel::T7 => 7,
            FlatModel::S1xCY3 => 1,
            FlatModel::T3xK3 => 3,
        }
    }

    /// Basis `dx_1, …, dx_{b¹}` of the allowed `ω` directions.
    pub fn omega_subspace<S: Scalar>(self) -> Vec<KForm<S>> {
        (1..=self.b1()).map(dx).collect()
    }

    pub fn holonomy_label(self) -> &'static str {
        match self {
            FlatModel::T7 => "{1}",
            FlatModel::S1xCY3 => "SU(3)",
            FlatModel::T3xK3 => "SU(2)",
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            FlatModel::T7 => "t7",
            FlatModel::S1xCY3 => "s1xcy3",
            FlatModel::T3xK3 => "t3xk3",
        }
    }
}

impl fmt::Display for FlatModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FlatModel {
    type Err = G2Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t7" => Ok(FlatModel::T7),
            "s1xcy3" => Ok(FlatModel::S1xCY3),
            "t3xk3" => Ok(FlatModel::T3xK3),
            other => Err(G2Error::UnsupportedModel(other.to_string())),
        }
    }
}

/// A complex-valued form `re + i·im`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexForm<S> {
    pub re: KForm<S>,
    pub im: KForm<S>,
}

impl<S: Scalar> ComplexForm<S> {
    /// `dz_k = dx_{2k} + i dx_{2k+1}`, `k = 1, 2, 3`.
    pub fn dz(k: usize) -> Self {
        assert!((1..=3).contains(&k));
        ComplexForm { re: dx(2 * k), im: dx(2 * k + 1) }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        Ok(ComplexForm {
            re: wedge(&self.re, &other.re)?.sub(&wedge(&self.im, &other.im)?),
            im: wedge(&self.re, &other.im)?.add(&wedge(&self.im, &other.re)?),
        })
    }
}

/// Kähler form `Σ dx_{2k} ∧ dx_{2k+1}` over the given complex coordinates.
fn kahler<S: Scalar>(ks: &[usize]) -> Result<KForm<S>> {
    ks.iter()
        .try_fold(KForm::zero(2), |acc, &k| Ok(acc.add(&wedge(&dx(2 * k), &dx(2 * k + 1))?)))
}

/// Holomorphic volume form `dz_{k1} ∧ dz_{k2} ∧ …`.
fn holomorphic_volume<S: Scalar>(ks: &[usize]) -> Result<ComplexForm<S>> {
    let (first, rest) = ks.split_first().expect("nonempty");
    rest.iter().try_fold(ComplexForm::dz(*first), |acc, &k| acc.wedge(&ComplexForm::dz(k)))
}

/// The model's 3-form, built from its product description.
pub fn model_form<S: Scalar>(m: FlatModel) -> Result<KForm<S>> {
    match m {
        FlatModel::T7 => Ok(crate::g2core::phi0()),
        FlatModel::S1xCY3 => {
            let omega = kahler(&[1, 2, 3])?;
            let vol = holomorphic_volume(&[1, 2, 3])?;
            Ok(wedge(&dx(1), &omega)?.add(&vol.re))
        }
        FlatModel::T3xK3 => {
            let omega = kahler(&[2, 3])?;
            let vol = holomorphic_volume(&[2, 3])?;
            let dx123 = wedge(&wedge(&dx(1), &dx(2))?, &dx(3))?;
            Ok(dx123
                .add(&wedge(&dx(1), &omega)?)
                .add(&wedge(&dx(2), &vol.re)?)
                .sub(&wedge(&dx(3), &vol.im)?))
        }
    }
}

pub fn model_phi<S: Scalar>(m: FlatModel) -> Result<G2Structure<S>> {
    G2Structure::new(model_form(m)?)
}

pub fn model_phi_with_tol<S: Scalar>(m: FlatModel, tol: f64) -> Result<G2Structure<S>> {
    G2Structure::with_tol(model_form(m)?, tol)
}

/// A point of the model's parameter space: canonical `(c, ω)` with `ω` in the
/// model's directions.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaPoint<S> {
    pub model: FlatModel,
    pub params: TwistParams<S>,
}

impl<S: Scalar> GammaPoint<S> {
    pub fn new(model: FlatModel, params: TwistParams<S>, tol: f64) -> Result<Self> {
        let outside = outside_norm(model, params.omega());
        if outside > limit::<S>(tol) {
            return Err(G2Error::SubspaceViolation { norm: outside });
        }
        Ok(GammaPoint { model, params: params.canonical(tol) })
    }

    pub fn equivalent(&self, other: &Self, tol: f64) -> bool {
        self.model == other.model && self.params.equivalent(&other.params, tol)
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.params.to_json();
        v["model"] = json!(self.model.tag());
        v
    }
}

fn limit<S: Scalar>(tol: f64) -> f64 {
    match S::MODE {
        crate::Mode::Exact => 0.0,
        crate::Mode::Float => SUBSPACE_TOL.max(tol),
    }
}

fn outside_norm<S: Scalar>(m: FlatModel, omega: &KForm<S>) -> f64 {
    omega.coeffs()[m.b1()..].iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt()
}

/// Deterministic rational point on the `b¹`-sphere, canonicalized.
pub fn gamma_sample<S: Scalar>(m: FlatModel, seed: u64) -> GammaPoint<S> {
    let mut r = rng(seed);
    let (c, w) = rational_twist_point(&mut r, m.b1(), false);
    gamma_from_rational(m, c, w)
}

/// As [`gamma_sample`] with `c = 0`.
pub fn gamma_sample_equatorial<S: Scalar>(m: FlatModel, seed: u64) -> GammaPoint<S> {
    let mut r = rng(seed);
    let (c, w) = rational_twist_point(&mut r, m.b1(), true);
    gamma_from_rational(m, c, w)
}

fn gamma_from_rational<S: Scalar>(m: FlatModel, c: crate::Rational, w: Vec<crate::Rational>) -> GammaPoint<S> {
    let c = S::from_rational(&c);
    let w: Vec<S> = w.iter().map(S::from_rational).collect();
    // exact on the rational sphere; float conversion stays within rounding
    let params = TwistParams::new(c, KForm::one_form(&w), &crate::exterior::Metric::euclidean())
        .expect("rational sphere point");
    GammaPoint::new(m, params, 0.0).expect("sampled in the subspace")
}

/// The model form twisted by a parameter point.
pub fn twist_model<S: Scalar>(p: &GammaPoint<S>) -> Result<KForm<S>> {
    twist(&model_phi(p.model)?, &p.params)
}

/// Recovers the parameter point of `phit` relative to the model form and
/// checks that `ω` lies in the model's directions.
pub fn gamma_membership<S: Scalar>(m: FlatModel, phit: &KForm<S>, tol: f64) -> Result<GammaPoint<S>> {
    membership_in(&model_phi_with_tol(m, tol)?, m, phit, tol)
}

fn membership_in<S: Scalar>(s: &G2Structure<S>, m: FlatModel, phit: &KForm<S>, tol: f64) -> Result<GammaPoint<S>> {
    let rec = recover(s, phit).map_err(|e| G2Error::RecoveryFailed(Box::new(e)))?;
    GammaPoint::new(m, rec.params, tol)
}

/// Derivative rank of the twist map restricted to the model's directions.
pub fn model_derivative_rank<S: Scalar>(p: &GammaPoint<S>) -> Result<DerivativeRank> {
    derivative_rank_in(&model_phi(p.model)?, &p.params, &p.model.omega_subspace())
}

/// Pulls the twisted form back along the translation `x ↦ x + t` of `T^7`
/// and reads off its parameter point. Constant forms are translation
/// invariant, so this returns `p`.
pub fn translation_action<S: Scalar>(m: FlatModel, t: &[S], p: &GammaPoint<S>, tol: f64) -> Result<GammaPoint<S>> {
    translate_in(&model_phi_with_tol(FlatModel::T7, tol)?, m, t, p, tol)
}

fn translate_in<S: Scalar>(s: &G2Structure<S>, m: FlatModel, t: &[S], p: &GammaPoint<S>, tol: f64) -> Result<GammaPoint<S>> {
    if m != FlatModel::T7 || p.model != FlatModel::T7 {
        return Err(G2Error::UnsupportedModel(format!("translations act only on t7, not {m}")));
    }
    if t.len() != DIM {
        return Err(G2Error::Dimension("translation needs 7 components".into()));
    }
    // the differential of a translation is the identity
    let jacobian = Mat::identity(DIM);
    let moved = pullback(&jacobian, &twist(s, &p.params)?)?;
    membership_in(s, m, &moved, tol)
}

/// Distinct points of `{translation_action(t, p)}` over the given translations.
pub fn translation_orbit<S: Scalar>(
    m: FlatModel,
    p: &GammaPoint<S>,
    translations: &[Vec<S>],
    tol: f64,
) -> Result<Vec<GammaPoint<S>>> {
    let s = model_phi_with_tol(FlatModel::T7, tol)?;
    let mut orbit = vec![p.clone()];
    for t in translations {
        let q = translate_in(&s, m, t, p, tol)?;
        if !orbit.iter().any(|o| o.equivalent(&q, tol)) {
            orbit.push(q);
        }
    }
    Ok(orbit)
}

/// Number of sheets of the covering over `p`'s image: the orbit size.
pub fn sheet_count<S: Scalar>(m: FlatModel, p: &GammaPoint<S>, translations: &[Vec<S>], tol: f64) -> Result<usize> {
    Ok(translation_orbit(m, p, translations, tol)?.len())
}

/// Real 7x7 matrix of a complex `n × n` matrix acting on `z_first, …`, zero
/// elsewhere. Entries are `(re, im)` pairs.
fn complex_block(first: usize, u: &[Vec<(f64, f64)>]) -> Mat<f64> {
    let mut m = Mat::zeros(DIM, DIM);
    for (a, row) in u.iter().enumerate() {
        for (b, &(re, im)) in row.iter().enumerate() {
            let (r, c) = (2 * (first + a) - 1, 2 * (first + b) - 1);
            m[(r, c)] = re;
            m[(r, c + 1)] = -im;
            m[(r + 1, c)] = im;
            m[(r + 1, c + 1)] = re;
        }
    }
    m
}

/// Sampled generators of the model's holonomy: `exp` of random traceless
/// anti-Hermitian matrices acting on the Calabi–Yau or K3 coordinates.
pub fn holonomy_sample(m: FlatModel, seed: u64, count: usize) -> Result<HolonomySpec<f64>> {
    let (first, n) = match m {
        FlatModel::T7 => return Ok(HolonomySpec::trivial()),
        FlatModel::S1xCY3 => (1, 3),
        FlatModel::T3xK3 => (2, 2),
    };
    let mut r = rng(seed);
    let generators = (0..count)
        .map(|_| {
            let h: Vec<f64> = random_unit_cube(&mut r, 2 * n * n);
            // X = H − H^†, then remove the (imaginary) trace
            let mut x = vec![vec![(0.0, 0.0); n]; n];
            for a in 0..n {
                for b in 0..n {
                    let (hr, hi) = (h[2 * (a * n + b)], h[2 * (a * n + b) + 1]);
                    let (tr, ti) = (h[2 * (b * n + a)], h[2 * (b * n + a) + 1]);
                    x[a][b] = (hr - tr, hi + ti);
                }
            }
            let trace: f64 = (0..n).map(|a| x[a][a].1).sum::<f64>() / n as f64;
            for (a, row) in x.iter_mut().enumerate() {
                row[a].1 -= trace;
            }
            expm(&complex_block(first, &x))
        })
        .collect::<Result<Vec<_>>>()?;
    HolonomySpec::new(generators, 1e-10)
}

/// Exploratory: fits the `S^1 × CY3` twist by `ω = s dθ` to
/// `dθ ∧ ω_K + Re(e^{iα} Ω)` and reports `α` with the fit residual.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseProbe {
    pub c: f64,
    pub s: f64,
    pub angle: f64,
    pub residual: f64,
}

pub fn su3_phase_probe(c: f64, s: f64) -> Result<PhaseProbe> {
    let st = model_phi::<f64>(FlatModel::S1xCY3)?;
    let params = TwistParams::new(c, dx::<f64>(1).scale(&s), st.metric())?;
    let phit = twist(&st, &params)?;
    let omega = kahler::<f64>(&[1, 2, 3])?;
    let vol = holomorphic_volume::<f64>(&[1, 2, 3])?;
    let base = wedge(&dx(1), &omega)?;
    let m = st.metric();
    let rest = phit.sub(&base);
    let cos = form_inner(&rest, &vol.re, m)? / form_inner(&vol.re, &vol.re, m)?;
    let sin = -form_inner(&rest, &vol.im, m)? / form_inner(&vol.im, &vol.im, m)?;
    let angle = sin.atan2(cos);
    let fitted = base.add(&vol.re.scale(&angle.cos())).sub(&vol.im.scale(&angle.sin()));
    Ok(PhaseProbe { c, s, angle, residual: fitted.max_abs_diff(&phit) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g2core::phi0;
    use crate::liegroup::{coset_tangent_dim, is_g2};
    use crate::scalar::Rational;

    type Q = Rational;

    #[test]
    fn models_reproduce_phi0() {
        for m in FlatModel::ALL {
            assert_eq!(model_form::<Q>(m).unwrap(), phi0(), "{m}");
        }
        let re = holomorphic_volume::<Q>(&[1, 2, 3]).unwrap().re;
        let expected = KForm::from_terms(
            3,
            &[(&[2, 4, 6], Q::from_i64(1)), (&[2, 5, 7], Q::from_i64(-1)), (&[3, 4, 7], Q::from_i64(-1)), (&[3, 5, 6], Q::from_i64(-1))],
        )
        .unwrap();
        assert_eq!(re, expected);
    }

    #[test]
    fn model_tags() {
        for m in FlatModel::ALL {
            assert_eq!(m.tag().parse::<FlatModel>().unwrap(), m);
            assert_eq!(m.omega_subspace::<Q>().len(), m.b1());
        }
        assert!("k3".parse::<FlatModel>().is_err());
    }

    #[test]
    fn samples_and_round_trip() {
        for m in FlatModel::ALL {
            for seed in 0..5 {
                let p = gamma_sample::<Q>(m, seed);
                assert!(p.params.c().is_positive() || p.params.c().is_zero());
                let back = gamma_membership(m, &twist_model(&p).unwrap(), 0.0).unwrap();
                assert_eq!(back, p);
                let e = gamma_sample_equatorial::<Q>(m, seed);
                assert!(gamma_membership(m, &twist_model(&e).unwrap(), 0.0).unwrap().equivalent(&e, 0.0));
            }
            let id = gamma_membership(m, &model_form::<Q>(m).unwrap(), 0.0).unwrap();
            assert_eq!(id.params, TwistParams::identity());
        }
    }

    #[test]
    fn subspace_violation() {
        let p = GammaPoint::<Q>::new(FlatModel::T7, TwistParams::new(Q::from_i64(0), dx(4), &crate::exterior::Metric::euclidean()).unwrap(), 0.0).unwrap();
        let err = gamma_membership(FlatModel::S1xCY3, &twist_model(&p).unwrap(), 0.0).unwrap_err();
        assert!(matches!(err, G2Error::SubspaceViolation { .. }));
        let other = crate::exterior::pullback(&Mat::diag(&[2, 1, 1, 1, 1, 1, 1].map(Q::from_i64)), &phi0()).unwrap();
        assert!(matches!(gamma_membership(FlatModel::T7, &other, 0.0), Err(G2Error::RecoveryFailed(_))));
    }

    #[test]
    fn model_ranks_match_b1() {
        for m in FlatModel::ALL {
            let r = model_derivative_rank(&gamma_sample::<Q>(m, 3)).unwrap();
            assert_eq!(r.rank, m.b1());
        }
    }

    #[test]
    fn torus_translations_are_trivial() {
        let p = gamma_sample::<Q>(FlatModel::T7, 9);
        let ts: Vec<Vec<Q>> = (0..5).map(|k| (0..7).map(|j| Q::from_ratio(k * j, 3)).collect()).collect();
        assert_eq!(translation_action(FlatModel::T7, &ts[1], &p, 0.0).unwrap(), p);
        assert_eq!(sheet_count(FlatModel::T7, &p, &ts, 0.0).unwrap(), 1);
        let q = gamma_sample::<Q>(FlatModel::S1xCY3, 9);
        assert!(matches!(translation_action(FlatModel::S1xCY3, &ts[1], &q, 0.0), Err(G2Error::UnsupportedModel(_))));
    }

    #[test]
    fn holonomy_samples_lie_in_g2_and_cosets_match_b1() {
        let s = G2Structure::<f64>::standard();
        for m in FlatModel::ALL {
            let h = holonomy_sample(m, 5, 3).unwrap();
            assert!(h.generators().iter().all(|g| is_g2(g, 1e-10)));
            assert_eq!(coset_tangent_dim(&h, &s).unwrap(), m.b1(), "{m}");
        }
    }

    #[test]
    fn phase_probe_runs() {
        let p = su3_phase_probe(0.6, 0.8).unwrap();
        assert!(p.residual.is_finite());
    }
}
