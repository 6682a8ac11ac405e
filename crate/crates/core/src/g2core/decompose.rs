use crate::error::{G2Error, Result};
use crate::exterior::{interior, KForm, DIM};
use crate::scalar::Scalar;

use super::G2Structure;

/// `β = p7 + p14` with `p7 ∈ Λ^2_7`, `p14 ∈ Λ^2_14`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition2<S> {
    pub p7: KForm<S>,
    pub p14: KForm<S>,
}

/// `η = p1 + p7 + p27`, with `p1 = f φ` and `p7 = X ⌟ *φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition3<S> {
    pub p1: KForm<S>,
    pub p7: KForm<S>,
    pub p27: KForm<S>,
    /// `f` with `p1 = f φ`.
    pub f: S,
    /// `X` with `p7 = X ⌟ *φ`.
    pub x: Vec<S>,
}

impl<S: Scalar> Decomposition2<S> {
    pub fn sum(&self) -> KForm<S> {
        self.p7.add(&self.p14)
    }
}

impl<S: Scalar> Decomposition3<S> {
    pub fn sum(&self) -> KForm<S> {
        self.p1.add(&self.p7).add(&self.p27)
    }
}

/// Spectral projection with `T(β) = *(φ ∧ β)`:
/// `p7 = (T - λ14) β / (λ7 - λ14)`.
pub fn decompose2<S: Scalar>(beta: &KForm<S>, s: &G2Structure<S>) -> Result<Decomposition2<S>> {
    let tb = s.t_operator(beta)?;
    let gap = s.lambda7().clone() - s.lambda14().clone();
    let p7 = tb.sub(&beta.scale(s.lambda14())).scale(&(S::one() / gap));
    let p14 = beta.sub(&p7);
    Ok(Decomposition2 { p7, p14 })
}

/// `p1 = <η, φ>/7 φ`, `p7` the orthogonal projection onto `span{e_i ⌟ *φ}`,
/// `p27` the remainder.
pub fn decompose3<S: Scalar>(eta: &KForm<S>, s: &G2Structure<S>) -> Result<Decomposition3<S>> {
    if eta.degree() != 3 {
        return Err(G2Error::DegreeMismatch { expected: 3, got: eta.degree() });
    }
    let f = s.inner(eta, s.phi())? / S::from_i64(7);
    let p1 = s.phi().scale(&f);

    let rhs: Vec<S> = s
        .psi_basis()
        .iter()
        .map(|b| s.inner(eta, b))
        .collect::<Result<_>>()?;
    let x = s.psi_gram_inv().mul_vec(&rhs);
    let p7 = interior(&x, s.psi())?;
    debug_assert_eq!(x.len(), DIM);

    let p27 = eta.sub(&p1).sub(&p7);
    Ok(Decomposition3 { p1, p7, p27, f, x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{unit_vector, MultiIndex};
    use crate::g2core::phi0;
    use crate::scalar::Rational;

    type Q = Rational;

    fn std() -> G2Structure<Q> {
        G2Structure::standard()
    }

    fn d(idx: &[usize]) -> KForm<Q> {
        KForm::basis(MultiIndex::new(idx).unwrap())
    }

    #[test]
    fn contraction_of_phi0_is_pure_seven() {
        let s = std();
        let beta = interior(&unit_vector(1), s.phi()).unwrap();
        let dec = decompose2(&beta, &s).unwrap();
        assert_eq!(dec.p7, beta);
        assert!(dec.p14.is_zero_tol(0.0));
    }

    #[test]
    fn fourteen_component() {
        let s = std();
        let beta = d(&[2, 3]).sub(&d(&[4, 5]));
        let wedge_psi = crate::exterior::wedge(&beta, s.psi()).unwrap();
        assert!(wedge_psi.is_zero_tol(0.0));
        let dec = decompose2(&beta, &s).unwrap();
        assert!(dec.p7.is_zero_tol(0.0));
        assert_eq!(dec.p14, beta);
    }

    #[test]
    fn dx23_projection() {
        // least-squares oracle: dx23 only meets e1 ⌟ φ0 = dx23 + dx45 + dx67, whose norm² is 3
        let s = std();
        let dec = decompose2(&d(&[2, 3]), &s).unwrap();
        let expected = d(&[2, 3]).add(&d(&[4, 5])).add(&d(&[6, 7])).scale(&Q::from_ratio(1, 3));
        assert_eq!(dec.p7, expected);
        assert_eq!(dec.p14, d(&[2, 3]).sub(&expected));
        assert_eq!(s.inner(&dec.p7, &dec.p14).unwrap(), Q::from_i64(0));
    }

    #[test]
    fn decompose3_of_phi_and_psi_contraction() {
        let s = std();
        let dec = decompose3(&phi0(), &s).unwrap();
        assert_eq!(dec.p1, phi0());
        assert!(dec.p7.is_zero_tol(0.0) && dec.p27.is_zero_tol(0.0));

        let eta = interior(&unit_vector(1), s.psi()).unwrap();
        let dec = decompose3(&eta, &s).unwrap();
        assert_eq!(dec.p7, eta);
        assert!(dec.p1.is_zero_tol(0.0) && dec.p27.is_zero_tol(0.0));
        assert_eq!(dec.x, unit_vector::<Q>(1));
    }

    #[test]
    fn zero_form_decomposes_to_zero() {
        let s = std();
        let dec = decompose3(&KForm::zero(3), &s).unwrap();
        assert!(dec.sum().is_zero_tol(0.0) && dec.p1.is_zero_tol(0.0));
        let dec = decompose2(&KForm::zero(2), &s).unwrap();
        assert!(dec.p7.is_zero_tol(0.0) && dec.p14.is_zero_tol(0.0));
        assert!(decompose3(&KForm::zero(2), &s).is_err());
    }
}
