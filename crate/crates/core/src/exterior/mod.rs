//! Exterior algebra of a fixed 7-dimensional real vector space.
//!
//! Forms are stored densely over all `C(7, k)` strictly increasing
//! multi-indices, in lexicographic order. Indices are 1-based at the API
//! boundary (`dx_1 .. dx_7`) and bitmasks internally.

mod json;
mod metric;

pub use json::{KFormJson, TermJson};
pub use metric::{flat, form_inner, hodge_star, norm_sq, sharp, volume_form, Metric, Orientation};

use std::fmt;
use std::sync::OnceLock;

use crate::error::{G2Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Dimension of the underlying vector space.
pub const DIM: usize = 7;

/// A strictly increasing tuple of indices in `1..=7`, stored as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(u8);

impl MultiIndex {
    pub fn new(indices: &[usize]) -> Result<Self> {
        let mut mask = 0u8;
        let mut last = 0;
        for &i in indices {
            if !(1..=DIM).contains(&i) || i <= last {
                return Err(G2Error::InvalidIndex(format!("{indices:?}")));
            }
            mask |= 1 << (i - 1);
            last = i;
        }
        Ok(MultiIndex(mask))
    }

    pub(crate) fn from_mask(mask: u8) -> Self {
        debug_assert!(mask < 128);
        MultiIndex(mask)
    }

    pub(crate) fn mask(self) -> u8 {
        self.0
    }

    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    /// 1-based indices in increasing order.
    pub fn indices(self) -> Vec<usize> {
        (0..DIM).filter(|b| self.0 & (1 << b) != 0).map(|b| b + 1).collect()
    }

    pub fn complement(self) -> Self {
        MultiIndex(!self.0 & 0x7f)
    }

    /// Position in the lexicographic basis of its degree.
    pub fn position(self) -> usize {
        tables().position[self.0 as usize]
    }

    /// All multi-indices of degree `k` in lexicographic order.
    pub fn all(k: usize) -> &'static [MultiIndex] {
        &tables().by_degree[k]
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dx")?;
        for i in self.indices() {
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

struct Tables {
    by_degree: Vec<Vec<MultiIndex>>,
    position: [usize; 128],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut by_degree: Vec<Vec<MultiIndex>> = vec![Vec::new(); DIM + 1];
        let mut all: Vec<Vec<usize>> = (0u8..128)
            .map(|m| MultiIndex(m).indices())
            .collect();
        all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let mut position = [0usize; 128];
        for idx in all {
            let mi = MultiIndex::new(&idx).expect("generated index");
            position[mi.0 as usize] = by_degree[idx.len()].len();
            by_degree[idx.len()].push(mi);
        }
        Tables { by_degree, position }
    })
}

pub fn binomial7(k: usize) -> usize {
    [1, 7, 21, 35, 35, 21, 7, 1][k]
}

/// Sign of the permutation sorting the concatenation `a ++ b` of two disjoint
/// sorted index sets: `(-1)^{#{(i, j) : i in a, j in b, i > j}}`.
pub(crate) fn shuffle_sign(a: u8, b: u8) -> i32 {
    let mut inversions = 0u32;
    for bit in 0..DIM {
        if b & (1 << bit) != 0 {
            inversions += (a >> (bit + 1)).count_ones();
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// A dense alternating k-form on the 7-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct KForm<S> {
    degree: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> KForm<S> {
    pub fn zero(degree: usize) -> Self {
        assert!(degree <= DIM, "degree {degree} exceeds 7");
        KForm { degree, coeffs: vec![S::zero(); binomial7(degree)] }
    }

    pub fn from_coeffs(degree: usize, coeffs: Vec<S>) -> Result<Self> {
        if degree > DIM {
            return Err(G2Error::DegreeOverflow(degree, 0));
        }
        if coeffs.len() != binomial7(degree) {
            return Err(G2Error::Dimension(format!(
                "degree {degree} needs {} coefficients, got {}",
                binomial7(degree),
                coeffs.len()
            )));
        }
        Ok(KForm { degree, coeffs })
    }

    /// Sum of `coeff * dx_idx` terms; every index tuple must have length `degree`.
    pub fn from_terms(degree: usize, terms: &[(&[usize], S)]) -> Result<Self> {
        let mut out = Self::zero(degree);
        for (idx, c) in terms {
            let mi = MultiIndex::new(idx)?;
            if mi.degree() != degree {
                return Err(G2Error::DegreeMismatch { expected: degree, got: mi.degree() });
            }
            let p = mi.position();
            out.coeffs[p] = out.coeffs[p].clone() + c.clone();
        }
        Ok(out)
    }

    /// `dx_idx` with unit coefficient.
    pub fn basis(idx: MultiIndex) -> Self {
        let mut out = Self::zero(idx.degree());
        out.coeffs[idx.position()] = S::one();
        out
    }

    pub fn scalar(c: S) -> Self {
        KForm { degree: 0, coeffs: vec![c] }
    }

    /// The 1-form with the given components.
    pub fn one_form(components: &[S]) -> Self {
        assert_eq!(components.len(), DIM);
        KForm { degree: 1, coeffs: components.to_vec() }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn coeff(&self, idx: MultiIndex) -> S {
        if idx.degree() != self.degree {
            return S::zero();
        }
        self.coeffs[idx.position()].clone()
    }

    /// Coefficient of `dx_{idx}` for a 1-based sorted index tuple.
    pub fn coeff_at(&self, idx: &[usize]) -> S {
        MultiIndex::new(idx).map(|m| self.coeff(m)).unwrap_or_else(|_| S::zero())
    }

    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, &S)> {
        MultiIndex::all(self.degree).iter().copied().zip(self.coeffs.iter())
    }

    pub fn nonzero_terms(&self) -> impl Iterator<Item = (MultiIndex, &S)> {
        self.terms().filter(|(_, c)| !c.is_zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        KForm {
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree, "subtracting forms of different degree");
        KForm {
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    pub fn scale(&self, k: &S) -> Self {
        KForm { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c.clone() * k.clone()).collect() }
    }

    pub fn neg(&self) -> Self {
        KForm { degree: self.degree, coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }

    pub fn is_zero_tol(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.is_zero_tol(tol))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.degree == other.degree && self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| a.near(b, tol))
    }

    /// Largest coefficient difference, in f64.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.degree, other.degree);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Euclidean norm of the coefficient vector, in f64.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.to_f64().powi(2)).sum::<f64>().sqrt()
    }

    pub fn to_f64(&self) -> KForm<f64> {
        KForm { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c.to_f64()).collect() }
    }

    /// Evaluates the form on `degree` vectors (each of length 7).
    pub fn evaluate(&self, vectors: &[&[S]]) -> S {
        assert_eq!(vectors.len(), self.degree);
        let mut total = S::zero();
        for (idx, c) in self.nonzero_terms() {
            let rows = idx.indices();
            let minor = Mat::from_fn(self.degree, self.degree, |r, col| {
                vectors[col][rows[r] - 1].clone()
            });
            total = total + c.clone() * minor.det();
        }
        total
    }
}

impl<S: Scalar> fmt::Display for KForm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (idx, c) in self.nonzero_terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if self.degree == 0 {
                write!(f, "{c}")?;
            } else {
                write!(f, "({c}) {idx}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Exterior product.
pub fn wedge<S: Scalar>(a: &KForm<S>, b: &KForm<S>) -> Result<KForm<S>> {
    let degree = a.degree + b.degree;
    if degree > DIM {
        return Err(G2Error::DegreeOverflow(a.degree, b.degree));
    }
    let mut out = KForm::<S>::zero(degree);
    for (i, ca) in a.nonzero_terms() {
        for (j, cb) in b.nonzero_terms() {
            if i.mask() & j.mask() != 0 {
                continue;
            }
            let p = MultiIndex::from_mask(i.mask() | j.mask()).position();
            let term = ca.clone() * cb.clone();
            out.coeffs[p] = if shuffle_sign(i.mask(), j.mask()) > 0 {
                out.coeffs[p].clone() + term
            } else {
                out.coeffs[p].clone() - term
            };
        }
    }
    Ok(out)
}

/// Interior product `v ⌟ a`, contracting the first slot.
pub fn interior<S: Scalar>(v: &[S], a: &KForm<S>) -> Result<KForm<S>> {
    if a.degree == 0 {
        return Err(G2Error::DegreeZero);
    }
    if v.len() != DIM {
        return Err(G2Error::Dimension(format!("vector of length {}", v.len())));
    }
    let mut out = KForm::<S>::zero(a.degree - 1);
    for (idx, c) in a.nonzero_terms() {
        for (r, i) in idx.indices().into_iter().enumerate() {
            let vi = &v[i - 1];
            if vi.is_zero() {
                continue;
            }
            let rest = MultiIndex::from_mask(idx.mask() & !(1 << (i - 1)));
            let p = rest.position();
            let term = vi.clone() * c.clone();
            out.coeffs[p] = if r % 2 == 0 {
                out.coeffs[p].clone() + term
            } else {
                out.coeffs[p].clone() - term
            };
        }
    }
    Ok(out)
}

/// Pullback `(L^* a)(u, v, ..) = a(Lu, Lv, ..)` by a linear map `L`:
/// `(L^* a)_I = sum_J a_J det(L[J, I])`.
pub fn pullback<S: Scalar>(l: &Mat<S>, a: &KForm<S>) -> Result<KForm<S>> {
    if l.rows() != DIM || l.cols() != DIM {
        return Err(G2Error::Dimension("pullback needs a 7x7 matrix".into()));
    }
    let k = a.degree;
    let targets = MultiIndex::all(k);
    let mut coeffs = vec![S::zero(); targets.len()];
    for (j, c) in a.nonzero_terms() {
        let rows = j.indices();
        for (slot, i) in targets.iter().enumerate() {
            let cols = i.indices();
            let minor = Mat::from_fn(k, k, |r, s| l[(rows[r] - 1, cols[s] - 1)].clone()).det();
            if !minor.is_zero() {
                coeffs[slot] = coeffs[slot].clone() + c.clone() * minor;
            }
        }
    }
    KForm::from_coeffs(k, coeffs)
}

/// Standard basis vector `e_i` (1-based).
pub fn unit_vector<S: Scalar>(i: usize) -> Vec<S> {
    (1..=DIM).map(|j| if i == j { S::one() } else { S::zero() }).collect()
}

/// `dx_i` (1-based).
pub fn dx<S: Scalar>(i: usize) -> KForm<S> {
    KForm::one_form(&unit_vector::<S>(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    type Q = Rational;

    fn q(n: i64) -> Q {
        Q::from_i64(n)
    }

    fn form(degree: usize, terms: &[(&[usize], i64)]) -> KForm<Q> {
        let t: Vec<(&[usize], Q)> = terms.iter().map(|(i, c)| (*i, q(*c))).collect();
        KForm::from_terms(degree, &t).unwrap()
    }

    #[test]
    fn multi_index_tables() {
        for k in 0..=DIM {
            assert_eq!(MultiIndex::all(k).len(), binomial7(k));
            for (p, mi) in MultiIndex::all(k).iter().enumerate() {
                assert_eq!(mi.position(), p);
            }
        }
        assert_eq!(MultiIndex::all(3)[0].indices(), vec![1, 2, 3]);
        assert_eq!(MultiIndex::all(3)[34].indices(), vec![5, 6, 7]);
        assert!(MultiIndex::new(&[2, 1]).is_err());
        assert!(MultiIndex::new(&[0]).is_err());
        assert!(MultiIndex::new(&[3, 3]).is_err());
    }

    #[test]
    fn wedge_basis_and_anticommutation() {
        let w = wedge(&dx::<Q>(1), &dx(2)).unwrap();
        assert_eq!(w, form(2, &[(&[1, 2], 1)]));
        let w = wedge(&dx::<Q>(2), &dx(1)).unwrap();
        assert_eq!(w, form(2, &[(&[1, 2], -1)]));
        assert!(wedge(&dx::<Q>(1), &dx(1)).unwrap().is_zero_tol(0.0));
    }

    #[test]
    fn wedge_degree_overflow() {
        let a = KForm::<Q>::zero(4);
        let b = KForm::<Q>::zero(4);
        assert_eq!(wedge(&a, &b), Err(G2Error::DegreeOverflow(4, 4)));
    }

    #[test]
    fn interior_examples() {
        let e1 = unit_vector::<Q>(1);
        let e4 = unit_vector::<Q>(4);
        let a = form(3, &[(&[1, 2, 3], 1)]);
        assert_eq!(interior(&e1, &a).unwrap(), form(2, &[(&[2, 3], 1)]));
        assert!(interior(&e4, &a).unwrap().is_zero_tol(0.0));
        let e2 = unit_vector::<Q>(2);
        assert_eq!(interior(&e2, &a).unwrap(), form(2, &[(&[1, 3], -1)]));
        assert_eq!(interior(&e1, &KForm::scalar(q(1))), Err(G2Error::DegreeZero));
    }

    #[test]
    fn evaluate_matches_coefficients() {
        let a = form(3, &[(&[1, 2, 3], 5), (&[2, 4, 6], -2)]);
        let (e1, e2, e3) = (unit_vector::<Q>(1), unit_vector::<Q>(2), unit_vector::<Q>(3));
        assert_eq!(a.evaluate(&[&e1, &e2, &e3]), q(5));
        assert_eq!(a.evaluate(&[&e2, &e1, &e3]), q(-5));
        let (e4, e6) = (unit_vector::<Q>(4), unit_vector::<Q>(6));
        assert_eq!(a.evaluate(&[&e6, &e4, &e2]), q(2));
    }
}
