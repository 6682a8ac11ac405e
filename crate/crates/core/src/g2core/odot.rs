use crate::error::{G2Error, Result};
use crate::exterior::{flat, interior, unit_vector, wedge, KForm, MultiIndex, DIM};
use crate::linalg::Mat;
use crate::scalar::Scalar;

use super::{decompose3, G2Structure};

/// A symmetric bilinear form, optionally flagged traceless.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor<S> {
    b: Mat<S>,
    traceless: bool,
}

impl<S: Scalar> SymTensor<S> {
    pub fn new(b: Mat<S>, tol: f64) -> Result<Self> {
        if b.rows() != DIM || !b.is_symmetric(tol) {
            return Err(G2Error::Dimension("expected a symmetric 7x7 matrix".into()));
        }
        Ok(SymTensor { b, traceless: false })
    }

    pub fn traceless(b: Mat<S>, tol: f64) -> Result<Self> {
        let t = Self::new(b, tol)?;
        if !t.b.trace().is_zero_tol(tol) {
            return Err(G2Error::Dimension("tensor is not traceless".into()));
        }
        Ok(SymTensor { traceless: true, ..t })
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.b
    }

    pub fn is_traceless(&self) -> bool {
        self.traceless
    }

    pub fn into_matrix(self) -> Mat<S> {
        self.b
    }
}

/// `(E·φ)(u,v,w) = φ(Eu,v,w) + φ(u,Ev,w) + φ(u,v,Ew)` for an endomorphism
/// `E`, evaluated on every basis triple.
pub fn derivation<S: Scalar>(e: &Mat<S>, phi: &KForm<S>) -> KForm<S> {
    let basis: Vec<Vec<S>> = (1..=DIM).map(unit_vector).collect();
    let images: Vec<Vec<S>> = (0..DIM).map(|i| e.column(i)).collect();
    let coeffs = MultiIndex::all(3)
        .iter()
        .map(|idx| {
            let ix = idx.indices();
            let (i, j, k) = (ix[0] - 1, ix[1] - 1, ix[2] - 1);
            phi.evaluate(&[&images[i], &basis[j], &basis[k]])
                + phi.evaluate(&[&basis[i], &images[j], &basis[k]])
                + phi.evaluate(&[&basis[i], &basis[j], &images[k]])
        })
        .collect();
    KForm::from_coeffs(3, coeffs).expect("35 coefficients")
}

/// Metric-dual endomorphism of a bilinear form: `b(u, v) = g(b̂u, v)`.
pub fn metric_dual<S: Scalar>(b: &Mat<S>, s: &G2Structure<S>) -> Mat<S> {
    s.metric().inverse().mul(&b.transpose())
}

/// `b ⊙ φ` for an arbitrary (not necessarily symmetric) bilinear form.
pub fn odot<S: Scalar>(b: &Mat<S>, s: &G2Structure<S>) -> Result<KForm<S>> {
    if b.rows() != DIM || b.cols() != DIM {
        return Err(G2Error::Dimension("odot needs a 7x7 matrix".into()));
    }
    Ok(derivation(&metric_dual(b, s), s.phi()))
}

/// `b ⊙ φ = b_ij ω_i ∧ (e_j ⌟ φ)` in an orthonormal frame `{e_i}`.
///
/// The standard basis is used when the metric is Euclidean and `frame` is
/// `None`; any other metric needs the frame.
pub fn odot_local<S: Scalar>(
    b: &SymTensor<S>,
    s: &G2Structure<S>,
    frame: Option<&[Vec<S>]>,
) -> Result<KForm<S>> {
    let standard: Vec<Vec<S>>;
    let frame = match frame {
        Some(f) => f,
        None if s.metric().is_euclidean() => {
            standard = (1..=DIM).map(unit_vector).collect();
            &standard
        }
        None => return Err(G2Error::NeedsFrame),
    };
    if frame.len() != DIM {
        return Err(G2Error::Dimension("frame needs 7 vectors".into()));
    }
    for (i, u) in frame.iter().enumerate() {
        for (j, v) in frame.iter().enumerate() {
            let expected = if i == j { S::one() } else { S::zero() };
            if !s.metric().dot(u, v).near(&expected, s.tol()) {
                return Err(G2Error::Dimension("frame is not orthonormal".into()));
            }
        }
    }
    let mut out = KForm::zero(3);
    for i in 0..DIM {
        let omega_i = flat(&frame[i], s.metric());
        let bi = b.matrix().mul_vec(&frame[i]);
        for j in 0..DIM {
            let bij = frame[j].iter().zip(&bi).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone());
            if bij.is_zero() {
                continue;
            }
            let term = wedge(&omega_i, &interior(&frame[j], s.phi())?)?;
            out = out.add(&term.scale(&bij));
        }
    }
    Ok(out)
}

/// Basis of symmetric 7x7 matrices: `E_ii`, then `E_ij + E_ji` for `i < j`.
pub fn symmetric_basis<S: Scalar>() -> Vec<Mat<S>> {
    let mut out = Vec::with_capacity(28);
    for i in 0..DIM {
        for j in i..DIM {
            let mut m = Mat::zeros(DIM, DIM);
            m[(i, j)] = S::one();
            m[(j, i)] = S::one();
            out.push(m);
        }
    }
    out
}

/// Basis of antisymmetric 7x7 matrices: `E_ij - E_ji` for `i < j`.
pub fn antisymmetric_basis<S: Scalar>() -> Vec<Mat<S>> {
    let mut out = Vec::with_capacity(21);
    for i in 0..DIM {
        for j in i + 1..DIM {
            let mut m = Mat::zeros(DIM, DIM);
            m[(i, j)] = S::one();
            m[(j, i)] = -S::one();
            out.push(m);
        }
    }
    out
}

/// The symmetric `b` with `b ⊙ φ = η`, for `η ∈ Λ^3_1 ⊕ Λ^3_27`.
///
/// The trace part comes from `p1 = f φ` via `g ⊙ φ = 3φ`; the traceless part
/// solves `b ⊙ φ = p27` over the symmetric matrices.
pub fn odot_inverse<S: Scalar>(eta: &KForm<S>, s: &G2Structure<S>) -> Result<SymTensor<S>> {
    let dec = decompose3(eta, s)?;
    if !dec.p7.is_zero_tol(s.tol()) {
        return Err(G2Error::HasP7Component { norm: dec.p7.coeff_norm() });
    }
    let trace_part = s.metric().matrix().scale(&(dec.f.clone() / S::from_i64(3)));

    let (system, left) = s.odot_symmetric_system()?;
    let x = left.mul_vec(dec.p27.coeffs());
    let residual = system
        .mul_vec(&x)
        .iter()
        .zip(dec.p27.coeffs())
        .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
        .fold(0.0, f64::max);
    if residual > s.tol().max(1e-9) * (1.0 + dec.p27.coeff_norm()) || (S::MODE == crate::Mode::Exact && residual > 0.0) {
        return Err(G2Error::NoSolution { residual });
    }
    let basis = symmetric_basis::<S>();
    let traceless = basis
        .iter()
        .zip(&x)
        .fold(Mat::zeros(DIM, DIM), |acc, (m, c)| acc.add(&m.scale(c)));
    SymTensor::new(trace_part.add(&traceless).symmetrized(), s.tol())
}

/// Derivative at `t = 0` of the frame action of `exp(tA)` on `φ`: `(-A) ⊙ φ`
/// with `-A` acting as the endomorphism itself.
pub fn infinitesimal_action<S: Scalar>(a: &Mat<S>, s: &G2Structure<S>) -> Result<KForm<S>> {
    if a.rows() != DIM || a.cols() != DIM {
        return Err(G2Error::Dimension("infinitesimal action needs a 7x7 matrix".into()));
    }
    Ok(derivation(&a.scale(&-S::one()), s.phi()))
}
