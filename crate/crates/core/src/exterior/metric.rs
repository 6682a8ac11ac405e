use crate::error::{G2Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

use super::{binomial7, shuffle_sign, KForm, MultiIndex, DIM};

/// Orientation relative to the reference top form `dx_1 ∧ … ∧ dx_7`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> i64 {
        match self {
            Orientation::Positive => 1,
            Orientation::Negative => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Self {
        if sign < 0 {
            Orientation::Negative
        } else {
            Orientation::Positive
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }
}

/// A positive definite inner product on the 7-dimensional space.
///
/// The inverse, `sqrt(det g)` and (for non-Euclidean metrics) the induced
/// Gram matrices on every `Λ^k` are computed once at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric<S> {
    g: Mat<S>,
    g_inv: Mat<S>,
    sqrt_det: S,
    euclidean: bool,
    /// `compound[k][I][J] = det(g^{-1}[I, J])`; empty when `euclidean`.
    compound: Vec<Mat<S>>,
}

impl<S: Scalar> Metric<S> {
    pub fn euclidean() -> Self {
        Metric {
            g: Mat::identity(DIM),
            g_inv: Mat::identity(DIM),
            sqrt_det: S::one(),
            euclidean: true,
            compound: Vec::new(),
        }
    }

    pub fn new(g: Mat<S>, tol: f64) -> Result<Self> {
        if g.rows() != DIM || g.cols() != DIM {
            return Err(G2Error::Dimension("metric must be 7x7".into()));
        }
        if !g.is_positive_definite(tol) {
            return Err(G2Error::NotPositiveDefinite);
        }
        if g == Mat::identity(DIM) {
            return Ok(Self::euclidean());
        }
        let g = g.symmetrized();
        let sqrt_det = g
            .det()
            .sqrt_checked()
            .ok_or_else(|| G2Error::Inexact("an irrational metric volume factor sqrt(det g)".into()))?;
        let g_inv = g.inverse(tol)?;
        let compound = (0..=DIM)
            .map(|k| {
                let idx = MultiIndex::all(k);
                Mat::from_fn(binomial7(k), binomial7(k), |a, b| {
                    let (ri, ci) = (idx[a].indices(), idx[b].indices());
                    Mat::from_fn(k, k, |r, c| g_inv[(ri[r] - 1, ci[c] - 1)].clone()).det()
                })
            })
            .collect();
        Ok(Metric { g, g_inv, sqrt_det, euclidean: false, compound })
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.g
    }

    pub fn inverse(&self) -> &Mat<S> {
        &self.g_inv
    }

    pub fn sqrt_det(&self) -> &S {
        &self.sqrt_det
    }

    pub fn is_euclidean(&self) -> bool {
        self.euclidean
    }

    /// Inner product of two vectors.
    pub fn dot(&self, u: &[S], v: &[S]) -> S {
        let gv = self.g.mul_vec(v);
        u.iter().zip(&gv).fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    /// Raises all indices of a k-form with the induced inverse metric on `Λ^k`.
    fn raise(&self, a: &KForm<S>) -> Vec<S> {
        if self.euclidean {
            a.coeffs().to_vec()
        } else {
            self.compound[a.degree()].mul_vec(a.coeffs())
        }
    }
}

/// Volume form `o * sqrt(det g) * dx_1..7`.
pub fn volume_form<S: Scalar>(m: &Metric<S>, o: Orientation) -> KForm<S> {
    let top = MultiIndex::all(DIM)[0];
    KForm::basis(top).scale(&(m.sqrt_det().clone() * S::from_i64(o.sign())))
}

/// Induced inner product on `Λ^k`.
pub fn form_inner<S: Scalar>(a: &KForm<S>, b: &KForm<S>, m: &Metric<S>) -> Result<S> {
    if a.degree() != b.degree() {
        return Err(G2Error::DegreeMismatch { expected: a.degree(), got: b.degree() });
    }
    let raised = m.raise(b);
    Ok(a.coeffs()
        .iter()
        .zip(&raised)
        .fold(S::zero(), |acc, (x, y)| if x.is_zero() { acc } else { acc + x.clone() * y.clone() }))
}

pub fn norm_sq<S: Scalar>(a: &KForm<S>, m: &Metric<S>) -> S {
    form_inner(a, a, m).expect("same degree")
}

/// Hodge star: the unique `(7-k)`-form with `a ∧ *b = <a, b> vol`.
pub fn hodge_star<S: Scalar>(a: &KForm<S>, m: &Metric<S>, o: Orientation) -> KForm<S> {
    let raised = m.raise(a);
    let scale = m.sqrt_det().clone() * S::from_i64(o.sign());
    let mut out = KForm::<S>::zero(DIM - a.degree());
    let mut coeffs = out.coeffs().to_vec();
    for (idx, c) in MultiIndex::all(a.degree()).iter().zip(raised) {
        if c.is_zero() {
            continue;
        }
        let comp = idx.complement();
        let v = c * scale.clone();
        let p = comp.position();
        coeffs[p] = if shuffle_sign(idx.mask(), comp.mask()) > 0 { v } else { -v };
    }
    out = KForm::from_coeffs(out.degree(), coeffs).expect("sized");
    out
}

/// Musical isomorphism vector -> 1-form.
pub fn flat<S: Scalar>(v: &[S], m: &Metric<S>) -> KForm<S> {
    KForm::one_form(&m.matrix().mul_vec(v))
}

/// Musical isomorphism 1-form -> vector.
pub fn sharp<S: Scalar>(a: &KForm<S>, m: &Metric<S>) -> Result<Vec<S>> {
    if a.degree() != 1 {
        return Err(G2Error::DegreeMismatch { expected: 1, got: a.degree() });
    }
    Ok(m.inverse().mul_vec(a.coeffs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{dx, unit_vector, wedge};
    use crate::scalar::Rational;

    type Q = Rational;

    #[test]
    fn star_of_five_form() {
        let m = Metric::<Q>::euclidean();
        let a = KForm::basis(MultiIndex::new(&[1, 2, 3, 4, 5]).unwrap());
        let s = hodge_star(&a, &m, Orientation::Positive);
        assert_eq!(s, KForm::basis(MultiIndex::new(&[6, 7]).unwrap()));
        let s = hodge_star(&a, &m, Orientation::Negative);
        assert_eq!(s, KForm::basis(MultiIndex::new(&[6, 7]).unwrap()).neg());
    }

    #[test]
    fn star_star_is_identity_non_euclidean() {
        let g = Mat::diag(&[4, 1, 9, 1, 1, 4, 1].map(Q::from_i64));
        let m = Metric::new(g, 0.0).unwrap();
        for k in 0..=7 {
            for idx in MultiIndex::all(k) {
                let a = KForm::<Q>::basis(*idx);
                let back = hodge_star(&hodge_star(&a, &m, Orientation::Positive), &m, Orientation::Positive);
                assert_eq!(back, a);
            }
        }
    }

    #[test]
    fn inner_product_matches_wedge_star() {
        let g = Mat::from_fn(7, 7, |i, j| {
            if i == j {
                Q::from_i64(2)
            } else if i + 1 == j || j + 1 == i {
                Q::from_i64(1)
            } else {
                Q::from_i64(0)
            }
        });
        // det of this tridiagonal matrix is 8, not a square: exact mode refuses it
        assert!(matches!(Metric::new(g.clone(), 0.0), Err(G2Error::Inexact(_))));
        let m = Metric::new(g.to_f64(), 1e-12).unwrap();
        let a = wedge(&dx::<f64>(1), &dx(2)).unwrap().add(&wedge(&dx(3), &dx(7)).unwrap().scale(&0.5));
        let b = wedge(&dx::<f64>(2), &dx(3)).unwrap().add(&wedge(&dx(1), &dx(2)).unwrap());
        let lhs = wedge(&a, &hodge_star(&b, &m, Orientation::Positive)).unwrap();
        let vol = volume_form(&m, Orientation::Positive);
        let ip = form_inner(&a, &b, &m).unwrap();
        assert!(lhs.approx_eq(&vol.scale(&ip), 1e-12));
    }

    #[test]
    fn flat_and_sharp() {
        let m = Metric::<Q>::euclidean();
        assert_eq!(flat(&unit_vector(1), &m), dx(1));
        let g = Mat::diag(&[4, 1, 1, 1, 1, 1, 1].map(Q::from_i64));
        let m = Metric::new(g, 0.0).unwrap();
        assert_eq!(flat(&unit_vector(1), &m), dx::<Q>(1).scale(&Q::from_i64(4)));
        let v: Vec<Q> = (1..=7).map(Q::from_i64).collect();
        assert_eq!(sharp(&flat(&v, &m), &m).unwrap(), v);
        assert!(sharp(&KForm::<Q>::zero(2), &m).is_err());
    }

    #[test]
    fn non_spd_metric_rejected() {
        let g = Mat::diag(&[1, 1, 1, -1, 1, 1, 1].map(Q::from_i64));
        assert_eq!(Metric::new(g, 0.0), Err(G2Error::NotPositiveDefinite));
    }

    #[test]
    fn inner_degree_mismatch() {
        let m = Metric::<Q>::euclidean();
        assert!(form_inner(&dx(1), &KForm::zero(2), &m).is_err());
    }
}
