use std::sync::OnceLock;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{G2Error, Result};
use crate::exterior::{
    form_inner, hodge_star, interior, unit_vector, volume_form, wedge, KForm, Metric, MultiIndex,
    Orientation, DIM,
};
use crate::linalg::Mat;
use crate::scalar::{Mode, Scalar, DEFAULT_TOL};

/// The standard G2 3-form
/// `dx123 + dx145 + dx167 + dx246 - dx257 - dx347 - dx356`.
pub fn phi0<S: Scalar>() -> KForm<S> {
    let (p, m) = (S::one(), -S::one());
    KForm::from_terms(
        3,
        &[
            (&[1, 2, 3], p.clone()),
            (&[1, 4, 5], p.clone()),
            (&[1, 6, 7], p.clone()),
            (&[2, 4, 6], p),
            (&[2, 5, 7], m.clone()),
            (&[3, 4, 7], m.clone()),
            (&[3, 5, 6], m),
        ],
    )
    .expect("valid terms")
}

/// `B_ij` with `(e_i ⌟ φ) ∧ (e_j ⌟ φ) ∧ φ = B_ij dx_1..7`.
pub fn bilinear_form<S: Scalar>(phi: &KForm<S>) -> Result<Mat<S>> {
    if phi.degree() != 3 {
        return Err(G2Error::DegreeMismatch { expected: 3, got: phi.degree() });
    }
    let contracted: Vec<KForm<S>> = (1..=DIM)
        .map(|i| interior(&unit_vector(i), phi))
        .collect::<Result<_>>()?;
    let top = MultiIndex::all(DIM)[0];
    let mut b = Mat::zeros(DIM, DIM);
    for i in 0..DIM {
        let left = wedge(&contracted[i], phi)?;
        for j in i..DIM {
            let v = wedge(&contracted[j], &left)?.coeff(top);
            b[(i, j)] = v.clone();
            b[(j, i)] = v;
        }
    }
    Ok(b)
}

/// Metric and orientation induced by a G2 3-form.
///
/// With `B` from [`bilinear_form`], `g = B / (36 det B)^{1/9}` after flipping
/// the sign of `B` (and the orientation) when `det B < 0`. In exact mode the
/// ninth root must be rational.
pub fn metric_from_phi<S: Scalar>(phi: &KForm<S>, tol: f64) -> Result<(Metric<S>, Orientation)> {
    let mut b = bilinear_form(phi)?;
    let mut det = b.det();
    let scale = b.max_abs().max(1.0).powi(DIM as i32);
    if det.is_zero_tol(tol * scale) {
        return Err(G2Error::NotG2Form("the bilinear form is degenerate".into()));
    }
    let orientation = if det.is_negative() {
        b = b.scale(&-S::one());
        det = -det;
        Orientation::Negative
    } else {
        Orientation::Positive
    };
    if !b.is_positive_definite(tol) {
        return Err(G2Error::NotG2Form("the bilinear form is indefinite".into()));
    }
    let k = (S::from_i64(36) * det).nth_root_checked(9).ok_or_else(|| {
        G2Error::Inexact("the metric of this 3-form (ninth root of 36 det B is irrational)".into())
    })?;
    let g = b.scale(&(S::one() / k));
    Ok((Metric::new(g, tol)?, orientation))
}

/// Orientation class of a G2 form, or `None` when `phi` is not one.
pub fn g2_orientation<S: Scalar>(phi: &KForm<S>, tol: f64) -> Option<Orientation> {
    metric_from_phi(phi, tol).ok().map(|(_, o)| o)
}

/// True iff `phi` induces a positive definite metric.
pub fn is_g2_form<S: Scalar>(phi: &KForm<S>, tol: f64) -> bool {
    g2_orientation(phi, tol).is_some()
}

/// A G2 3-form together with its metric, orientation, volume form and the
/// operators used by the type decompositions.
#[derive(Clone, Debug)]
pub struct G2Structure<S> {
    phi: KForm<S>,
    psi: KForm<S>,
    metric: Metric<S>,
    orientation: Orientation,
    vol: KForm<S>,
    lambda7: S,
    lambda14: S,
    /// `e_i ⌟ ψ`, spanning `Λ^3_7`.
    psi_basis: Vec<KForm<S>>,
    psi_gram_inv: Mat<S>,
    /// Matrix of `b ↦ b ⊙ φ` on [`super::symmetric_basis`] and a left inverse,
    /// built on first use.
    odot_sym: OnceLock<(Mat<S>, Mat<S>)>,
    tol: f64,
}

impl<S: Scalar> G2Structure<S> {
    pub fn new(phi: KForm<S>) -> Result<Self> {
        Self::with_tol(phi, DEFAULT_TOL)
    }

    /// The standard structure `φ₀` on Euclidean space.
    pub fn standard() -> Self {
        Self::new(phi0()).expect("phi0 is a G2 form")
    }

    pub fn with_tol(phi: KForm<S>, tol: f64) -> Result<Self> {
        let (metric, orientation) = metric_from_phi(&phi, tol)?;
        let vol = volume_form(&metric, orientation);
        let psi = hodge_star(&phi, &metric, orientation);

        let norm = form_inner(&phi, &phi, &metric)?;
        if !norm.near(&S::from_i64(7), tol * 7.0) {
            return Err(G2Error::NotG2Form(format!("<phi, phi> = {norm}, expected 7")));
        }

        let t = t_matrix(&phi, &metric, orientation)?;
        let (lambda7, lambda14) = two_eigenspaces(&t, tol)?;

        let psi_basis: Vec<KForm<S>> = (1..=DIM)
            .map(|i| interior(&unit_vector(i), &psi))
            .collect::<Result<_>>()?;
        let gram = Mat::from_fn(DIM, DIM, |i, j| {
            form_inner(&psi_basis[i], &psi_basis[j], &metric).expect("3-forms")
        });
        let psi_gram_inv = gram.inverse(tol)?;

        Ok(G2Structure { phi, psi, metric, orientation, vol, lambda7, lambda14, psi_basis, psi_gram_inv, odot_sym: OnceLock::new(), tol })
    }

    pub fn phi(&self) -> &KForm<S> {
        &self.phi
    }

    /// `*φ`.
    pub fn psi(&self) -> &KForm<S> {
        &self.psi
    }

    pub fn metric(&self) -> &Metric<S> {
        &self.metric
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn vol(&self) -> &KForm<S> {
        &self.vol
    }

    /// Eigenvalue of `β ↦ *(φ ∧ β)` on `Λ^2_7`.
    pub fn lambda7(&self) -> &S {
        &self.lambda7
    }

    /// Eigenvalue of `β ↦ *(φ ∧ β)` on `Λ^2_14`.
    pub fn lambda14(&self) -> &S {
        &self.lambda14
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn star(&self, a: &KForm<S>) -> KForm<S> {
        hodge_star(a, &self.metric, self.orientation)
    }

    pub fn inner(&self, a: &KForm<S>, b: &KForm<S>) -> Result<S> {
        form_inner(a, b, &self.metric)
    }

    /// `β ↦ *(φ ∧ β)` on 2-forms.
    pub fn t_operator(&self, beta: &KForm<S>) -> Result<KForm<S>> {
        if beta.degree() != 2 {
            return Err(G2Error::DegreeMismatch { expected: 2, got: beta.degree() });
        }
        Ok(self.star(&wedge(&self.phi, beta)?))
    }

    pub(crate) fn psi_basis(&self) -> &[KForm<S>] {
        &self.psi_basis
    }

    pub(crate) fn odot_symmetric_system(&self) -> Result<&(Mat<S>, Mat<S>)> {
        if let Some(sys) = self.odot_sym.get() {
            return Ok(sys);
        }
        let columns: Vec<Vec<S>> = super::symmetric_basis::<S>()
            .iter()
            .map(|m| super::odot(m, self).map(|f| f.coeffs().to_vec()))
            .collect::<Result<_>>()?;
        let a = Mat::from_columns(35, &columns);
        let left = a.transpose().mul(&a).inverse(self.tol)?.mul(&a.transpose());
        Ok(self.odot_sym.get_or_init(|| (a, left)))
    }

    pub(crate) fn psi_gram_inv(&self) -> &Mat<S> {
        &self.psi_gram_inv
    }

    /// JSON: the phi form, the mode, and hashes of the derived metric and volume.
    pub fn to_json(&self) -> Value {
        json!({
            "mode": S::MODE,
            "phi": self.phi.to_json(),
            "metric_hash": matrix_hash(self.metric.matrix()),
            "vol_hash": form_hash(&self.vol),
        })
    }

    /// Rebuilds the structure from `phi` and checks the stored hashes.
    pub fn from_json(v: &Value) -> Result<Self> {
        let mode: Mode = v
            .get("mode")
            .and_then(Value::as_str)
            .ok_or_else(|| G2Error::Parse("missing mode".into()))?
            .parse()?;
        if mode != S::MODE {
            return Err(G2Error::Parse(format!("structure was saved in {mode} mode")));
        }
        let phi = KForm::from_json(v.get("phi").ok_or_else(|| G2Error::Parse("missing phi".into()))?)?;
        let s = Self::new(phi)?;
        if let Some(h) = v.get("metric_hash").and_then(Value::as_str) {
            if h != matrix_hash(s.metric.matrix()) {
                return Err(G2Error::HashMismatch("metric"));
            }
        }
        if let Some(h) = v.get("vol_hash").and_then(Value::as_str) {
            if h != form_hash(&s.vol) {
                return Err(G2Error::HashMismatch("volume form"));
            }
        }
        Ok(s)
    }
}

fn matrix_hash<S: Scalar>(m: &Mat<S>) -> String {
    let entries: Vec<Value> = m.data().iter().map(Scalar::to_json).collect();
    hex::encode(Sha256::digest(Value::Array(entries).to_string().as_bytes()))
}

fn form_hash<S: Scalar>(f: &KForm<S>) -> String {
    hex::encode(Sha256::digest(f.to_json().to_string().as_bytes()))
}

/// Matrix of `β ↦ *(φ ∧ β)` in the basis `dx_ij` of `Λ^2`.
pub fn t_matrix<S: Scalar>(phi: &KForm<S>, metric: &Metric<S>, o: Orientation) -> Result<Mat<S>> {
    let columns: Vec<Vec<S>> = MultiIndex::all(2)
        .iter()
        .map(|&idx| {
            let image = hodge_star(&wedge(phi, &KForm::basis(idx))?, metric, o);
            Ok(image.coeffs().to_vec())
        })
        .collect::<Result<_>>()?;
    Ok(Mat::from_columns(21, &columns))
}

/// For an operator with exactly two eigenvalues (minimal polynomial of degree
/// two), returns `(λ7, λ14)` keyed by eigenspace dimension. Errors unless the
/// dimensions are exactly 7 and 14.
pub fn two_eigenspaces<S: Scalar>(t: &Mat<S>, tol: f64) -> Result<(S, S)> {
    let n = t.rows();
    let (a, b) = quadratic_minimal_polynomial(t, tol)?;
    let disc = a.clone() * a.clone() + S::from_i64(4) * b;
    let root = disc
        .sqrt_checked()
        .ok_or_else(|| G2Error::Inexact("eigenvalues of *(phi ∧ .) on 2-forms".into()))?;
    let half = S::from_ratio(1, 2);
    let hi = (a.clone() + root.clone()) * half.clone();
    let lo = (a - root) * half;
    let ident = Mat::identity(n);
    let dim_of = |l: &S| n - t.sub(&ident.scale(l)).rank();
    match (dim_of(&hi), dim_of(&lo)) {
        (7, 14) => Ok((hi, lo)),
        (14, 7) => Ok((lo, hi)),
        (d1, d2) => Err(G2Error::NotG2Form(format!("eigenspace dimensions {d1} and {d2}, expected 7 and 14"))),
    }
}

/// Finds `(a, b)` with `T² = aT + bI`.
fn quadratic_minimal_polynomial<S: Scalar>(t: &Mat<S>, tol: f64) -> Result<(S, S)> {
    let n = t.rows();
    let t2 = t.mul(t);
    let thresh = tol * t.max_abs().max(1.0).powi(2);
    let mut probes: Vec<Vec<S>> = (0..n).map(|i| {
        (0..n).map(|j| if i == j { S::one() } else { S::zero() }).collect()
    }).collect();
    probes.push((0..n).map(|j| S::from_i64(j as i64 + 1)).collect());
    for v in probes {
        let tv = t.mul_vec(&v);
        let pair = Mat::from_columns(n, &[tv.clone(), v.clone()]);
        if pair.rank() < 2 {
            continue;
        }
        let ttv = t.mul_vec(&tv);
        let Ok((ab, _)) = pair.solve(&ttv, tol) else { continue };
        let (a, b) = (ab[0].clone(), ab[1].clone());
        let check = t2.sub(&t.scale(&a)).sub(&Mat::identity(n).scale(&b));
        if check.data().iter().all(|x| x.is_zero_tol(thresh)) {
            return Ok((a, b));
        }
        return Err(G2Error::NotG2Form("*(phi ∧ .) has more than two eigenvalues".into()));
    }
    Err(G2Error::NotG2Form("*(phi ∧ .) is a multiple of the identity".into()))
}
