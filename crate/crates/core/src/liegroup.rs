//! G2 inside SO(7): membership tests, the Lie algebra `g2 ≅ Λ^2_14`,
//! normalizers, and the conjugation predicate for holonomy generators.

use serde_json::{json, Value};

use crate::error::{G2Error, Result};
use crate::exterior::{pullback, KForm, MultiIndex, DIM};
use crate::g2core::{antisymmetric_basis, phi0, t_matrix, G2Structure};
use crate::linalg::{Mat, Matrix7};
use crate::scalar::Scalar;

/// `gᵀg = I` and `det g = 1`.
pub fn is_so7<S: Scalar>(g: &Matrix7<S>, tol: f64) -> bool {
    if g.rows() != DIM || g.cols() != DIM {
        return false;
    }
    let gram = g.transpose().mul(g);
    gram.sub(&Mat::identity(DIM)).data().iter().all(|x| x.is_zero_tol(tol))
        && (g.det() - S::one()).is_zero_tol(tol)
}

/// `g · φ(u, v, w) = φ(g⁻¹u, g⁻¹v, g⁻¹w)`, for orthogonal `g`.
pub fn act<S: Scalar>(g: &Matrix7<S>, phi: &KForm<S>) -> Result<KForm<S>> {
    pullback(&g.transpose(), phi)
}

/// `g ∈ SO(7)` and `g · φ0 = φ0`.
pub fn is_g2<S: Scalar>(g: &Matrix7<S>, tol: f64) -> bool {
    if !is_so7(g, tol) {
        return false;
    }
    let phi = phi0::<S>();
    match act(g, &phi) {
        Ok(moved) => moved.sub(&phi).is_zero_tol(tol),
        Err(_) => false,
    }
}

/// Skew matrix of a 2-form: `B_ij = β(e_i, e_j)`.
pub fn two_form_to_matrix<S: Scalar>(beta: &KForm<S>) -> Result<Matrix7<S>> {
    if beta.degree() != 2 {
        return Err(G2Error::DegreeMismatch { expected: 2, got: beta.degree() });
    }
    let mut m = Mat::zeros(DIM, DIM);
    for (idx, c) in beta.terms() {
        let ix = idx.indices();
        let (i, j) = (ix[0] - 1, ix[1] - 1);
        m[(i, j)] = c.clone();
        m[(j, i)] = -c.clone();
    }
    Ok(m)
}

/// 2-form of a skew matrix, inverse of [`two_form_to_matrix`].
pub fn matrix_to_two_form<S: Scalar>(a: &Matrix7<S>) -> KForm<S> {
    let coeffs = MultiIndex::all(2)
        .iter()
        .map(|idx| {
            let ix = idx.indices();
            a[(ix[0] - 1, ix[1] - 1)].clone()
        })
        .collect();
    KForm::from_coeffs(2, coeffs).expect("21 coefficients")
}

fn flatten<S: Scalar>(m: &Mat<S>) -> Vec<S> {
    m.data().to_vec()
}

/// Linearly independent antisymmetric matrices spanning a Lie subalgebra
/// candidate of `so(7)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubalgebraBasis<S> {
    basis: Vec<Matrix7<S>>,
}

impl<S: Scalar> SubalgebraBasis<S> {
    pub fn new(basis: Vec<Matrix7<S>>, tol: f64) -> Result<Self> {
        for m in &basis {
            if m.rows() != DIM || m.cols() != DIM {
                return Err(G2Error::Dimension("basis elements must be 7x7".into()));
            }
            if !m.is_antisymmetric(tol) {
                return Err(G2Error::Dimension("basis element is not antisymmetric".into()));
            }
        }
        let out = SubalgebraBasis { basis };
        if out.span_matrix().rank() != out.dim() {
            return Err(G2Error::Dimension("basis elements are linearly dependent".into()));
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn matrices(&self) -> &[Matrix7<S>] {
        &self.basis
    }

    /// 49 × dim matrix whose columns are the flattened basis elements.
    fn span_matrix(&self) -> Mat<S> {
        let cols: Vec<Vec<S>> = self.basis.iter().map(flatten).collect();
        if cols.is_empty() {
            return Mat::zeros(DIM * DIM, 0);
        }
        Mat::from_columns(DIM * DIM, &cols)
    }

    /// Rows spanning the annihilator of the span, as linear functionals on
    /// flattened 7x7 matrices.
    fn annihilator(&self, tol: f64) -> Mat<S> {
        if self.basis.is_empty() {
            return Mat::identity(DIM * DIM);
        }
        let rows = self.span_matrix().transpose().nullspace(tol);
        if rows.is_empty() {
            return Mat::zeros(0, DIM * DIM);
        }
        Mat::from_columns(DIM * DIM, &rows).transpose()
    }

    pub fn contains(&self, a: &Matrix7<S>) -> bool {
        let mut cols: Vec<Vec<S>> = self.basis.iter().map(flatten).collect();
        cols.push(flatten(a));
        Mat::from_columns(DIM * DIM, &cols).rank() == self.dim()
    }

    pub fn contains_all(&self, other: &Self) -> bool {
        other.basis.iter().all(|m| self.contains(m))
    }

    pub fn is_bracket_closed(&self) -> bool {
        self.basis
            .iter()
            .enumerate()
            .all(|(i, a)| self.basis[i + 1..].iter().all(|b| self.contains(&a.bracket(b))))
    }

    pub fn to_f64(&self) -> SubalgebraBasis<f64> {
        SubalgebraBasis { basis: self.basis.iter().map(Mat::to_f64).collect() }
    }
}

/// The 21 elementary antisymmetric matrices `E_ij − E_ji`.
pub fn so7_basis<S: Scalar>() -> SubalgebraBasis<S> {
    SubalgebraBasis { basis: antisymmetric_basis() }
}

/// `g2` as the skew matrices of `Λ^2_14`, the `λ14`-eigenspace of
/// `β ↦ *(φ ∧ β)`. Needs a Euclidean metric so that the result is skew.
pub fn g2_algebra_basis<S: Scalar>(s: &G2Structure<S>) -> Result<SubalgebraBasis<S>> {
    if !s.metric().is_euclidean() {
        return Err(G2Error::Dimension("g2 basis needs a Euclidean metric".into()));
    }
    let t = t_matrix(s.phi(), s.metric(), s.orientation())?;
    let shifted = t.sub(&Mat::identity(21).scale(s.lambda14()));
    let basis = shifted
        .nullspace(s.tol())
        .into_iter()
        .map(|v| two_form_to_matrix(&KForm::from_coeffs(2, v).expect("21 coefficients")))
        .collect::<Result<Vec<_>>>()?;
    if basis.len() != 14 {
        return Err(G2Error::NotG2Form(format!("Λ^2_14 has dimension {}", basis.len())));
    }
    SubalgebraBasis::new(basis, s.tol())
}

/// `{A ∈ span(ambient) : [A, h] ∈ span(sub) for every h in sub}`.
pub fn lie_normalizer<S: Scalar>(
    ambient: &SubalgebraBasis<S>,
    sub: &SubalgebraBasis<S>,
    tol: f64,
) -> Result<SubalgebraBasis<S>> {
    if !ambient.contains_all(sub) {
        return Err(G2Error::NotInAmbient);
    }
    if !sub.is_bracket_closed() {
        return Err(G2Error::NotBracketClosed);
    }
    let ann = sub.annihilator(tol);
    let d = ambient.dim();
    let mut rows: Vec<Vec<S>> = Vec::new();
    for h in sub.matrices() {
        let images: Vec<Vec<S>> = ambient
            .matrices()
            .iter()
            .map(|x| ann.mul_vec(&flatten(&x.bracket(h))))
            .collect();
        for r in 0..ann.rows() {
            rows.push((0..d).map(|k| images[k][r].clone()).collect());
        }
    }
    let coefficient_space = if rows.is_empty() {
        (0..d).map(|k| (0..d).map(|j| if j == k { S::one() } else { S::zero() }).collect()).collect()
    } else {
        Mat::from_columns(d, &rows).transpose().nullspace(tol)
    };
    let basis = coefficient_space
        .iter()
        .map(|coeffs| {
            ambient
                .matrices()
                .iter()
                .zip(coeffs)
                .fold(Mat::zeros(DIM, DIM), |acc, (m, c)| acc.add(&m.scale(c)))
        })
        .collect();
    SubalgebraBasis::new(basis, tol.max(1e-9))
}

/// Finite generating set standing in for a holonomy group; empty means
/// trivial holonomy.
#[derive(Clone, Debug, PartialEq)]
pub struct HolonomySpec<S> {
    generators: Vec<Matrix7<S>>,
}

impl<S: Scalar> HolonomySpec<S> {
    pub fn new(generators: Vec<Matrix7<S>>, tol: f64) -> Result<Self> {
        if generators.iter().any(|g| !is_so7(g, tol)) {
            return Err(G2Error::NotSpecialOrthogonal);
        }
        Ok(HolonomySpec { generators })
    }

    pub fn trivial() -> Self {
        HolonomySpec { generators: Vec::new() }
    }

    pub fn generators(&self) -> &[Matrix7<S>] {
        &self.generators
    }

    /// `{g⁻¹ h g}` for the generators `h`.
    pub fn conjugated(&self, g: &Matrix7<S>) -> Self {
        let gi = g.transpose();
        HolonomySpec { generators: self.generators.iter().map(|h| gi.mul(h).mul(g)).collect() }
    }

    pub fn to_json(&self) -> Value {
        json!({ "generators": self.generators.iter().map(matrix_to_json).collect::<Vec<_>>() })
    }

    pub fn from_json(v: &Value, tol: f64) -> Result<Self> {
        let gens = v
            .get("generators")
            .and_then(Value::as_array)
            .ok_or_else(|| G2Error::Parse("expected {\"generators\": [...]}".into()))?;
        let generators = gens.iter().map(matrix_from_json).collect::<Result<_>>()?;
        Self::new(generators, tol)
    }
}

pub fn matrix_to_json<S: Scalar>(m: &Matrix7<S>) -> Value {
    Value::Array(m.data().iter().map(Scalar::to_json).collect())
}

/// A row-major array of 49 scalars.
pub fn matrix_from_json<S: Scalar>(v: &Value) -> Result<Matrix7<S>> {
    let rows = v
        .as_array()
        .ok_or_else(|| G2Error::Parse("matrix must be an array of 49 scalars or 7 rows".into()))?;
    let flat: Vec<Value>;
    let entries = if rows.len() == DIM && rows.iter().all(Value::is_array) {
        flat = rows.iter().flat_map(|r| r.as_array().into_iter().flatten().cloned()).collect();
        if rows.iter().any(|r| r.as_array().map_or(0, Vec::len) != DIM) {
            return Err(G2Error::Parse("matrix rows must have 7 entries".into()));
        }
        &flat
    } else {
        rows
    };
    if entries.len() != DIM * DIM {
        return Err(G2Error::Parse(format!("matrix has {} entries, expected 49", entries.len())));
    }
    let data = entries.iter().map(S::from_json).collect::<Result<_>>()?;
    Mat::from_row_major(DIM, DIM, data)
}

/// Whether `g⁻¹ h g ∈ G2` for every generator `h`.
pub fn nf_member<S: Scalar>(g: &Matrix7<S>, h: &HolonomySpec<S>, tol: f64) -> Result<bool> {
    if !is_so7(g, tol) {
        return Err(G2Error::NotSpecialOrthogonal);
    }
    Ok(h.conjugated(g).generators.iter().all(|x| is_g2(x, tol)))
}

/// Dimension at the identity coset of the first-order solutions
/// `A ∈ so(7)` with `(I − Ad_{h⁻¹}) A ∈ g2` for every generator, modulo `g2`.
/// Requires every generator to lie in G2, i.e. the identity to be in `N_f`.
pub fn coset_tangent_dim<S: Scalar>(h: &HolonomySpec<S>, s: &G2Structure<S>) -> Result<usize> {
    let tol = s.tol();
    if let Some(i) = h.generators.iter().position(|x| !is_g2(x, tol.max(1e-9))) {
        return Err(G2Error::IdentityNotInNf(i));
    }
    let g2 = g2_algebra_basis(s)?;
    let so7 = so7_basis::<S>();
    let ann = g2.annihilator(tol);
    let mut rows: Vec<Vec<S>> = Vec::new();
    for x in &h.generators {
        let xi = x.transpose();
        let images: Vec<Vec<S>> = so7
            .matrices()
            .iter()
            .map(|a| ann.mul_vec(&flatten(&a.sub(&xi.mul(a).mul(x)))))
            .collect();
        for r in 0..ann.rows() {
            rows.push((0..so7.dim()).map(|k| images[k][r].clone()).collect());
        }
    }
    let solutions = if rows.is_empty() {
        so7.dim()
    } else {
        so7.dim() - Mat::from_columns(so7.dim(), &rows).transpose().rank()
    };
    Ok(solutions - g2.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g2core::infinitesimal_action;
    use crate::linalg::expm;
    use crate::scalar::Rational;

    type Q = Rational;

    fn rotation12(theta: f64) -> Mat<f64> {
        let mut m = Mat::identity(7);
        m[(0, 0)] = theta.cos();
        m[(0, 1)] = -theta.sin();
        m[(1, 0)] = theta.sin();
        m[(1, 1)] = theta.cos();
        m
    }

    #[test]
    fn so7_membership() {
        assert!(is_so7(&Mat::<Q>::identity(7), 0.0));
        let mut reflect = Mat::<Q>::identity(7);
        reflect[(0, 0)] = Q::from_i64(-1);
        assert!(!is_so7(&reflect, 0.0));
        let a = crate::sampling::random_antisymmetric::<f64>(&mut crate::sampling::rng(3));
        assert!(is_so7(&expm(&a.scale(&0.1)).unwrap(), 1e-10));
    }

    #[test]
    fn g2_membership() {
        assert!(is_g2(&Mat::<Q>::identity(7), 0.0));
        assert!(!is_g2(&rotation12(1.0), 1e-10));
        let s = G2Structure::<f64>::standard();
        for a in g2_algebra_basis(&s).unwrap().matrices() {
            assert!(is_g2(&expm(&a.scale(&0.7)).unwrap(), 1e-10));
        }
    }

    #[test]
    fn g2_basis_is_the_kernel_of_the_action() {
        let s = G2Structure::<Q>::standard();
        let g2 = g2_algebra_basis(&s).unwrap();
        assert_eq!(g2.dim(), 14);
        assert!(g2.is_bracket_closed());
        for a in g2.matrices() {
            assert!(infinitesimal_action(a, &s).unwrap().is_zero_tol(0.0));
        }
    }

    #[test]
    fn normalizers() {
        let s = G2Structure::<Q>::standard();
        let g2 = g2_algebra_basis(&s).unwrap();
        let so7 = so7_basis::<Q>();
        let n = lie_normalizer(&so7, &g2, 0.0).unwrap();
        assert_eq!(n.dim(), 14);
        assert!(n.contains_all(&g2));
        assert_eq!(lie_normalizer(&so7, &so7, 0.0).unwrap().dim(), 21);

        // so(3) on coordinates 1..3 and one rotation generator in it
        let so3: Vec<Mat<Q>> = antisymmetric_basis::<Q>()
            .into_iter()
            .filter(|m| (3..7).all(|k| (0..7).all(|j| m[(k, j)] == Q::from_i64(0))))
            .collect();
        let ambient = SubalgebraBasis::new(so3.clone(), 0.0).unwrap();
        assert_eq!(ambient.dim(), 3);
        let line = SubalgebraBasis::new(vec![so3[0].clone()], 0.0).unwrap();
        assert_eq!(lie_normalizer(&ambient, &line, 0.0).unwrap().dim(), 1);
    }

    #[test]
    fn normalizer_rejects_non_subalgebra() {
        let so7 = so7_basis::<Q>();
        let pair = SubalgebraBasis::new(so7.matrices()[..2].to_vec(), 0.0).unwrap();
        assert_eq!(lie_normalizer(&so7, &pair, 0.0), Err(G2Error::NotBracketClosed));
    }

    #[test]
    fn nf_membership_and_cosets() {
        let s = G2Structure::<f64>::standard();
        let g2 = g2_algebra_basis(&s).unwrap();
        let mut r = crate::sampling::rng(11);
        let gens: Vec<Mat<f64>> = (0..3)
            .map(|_| {
                let w = crate::sampling::random_unit_cube(&mut r, 14);
                let a = g2.matrices().iter().zip(&w).fold(Mat::zeros(7, 7), |acc, (m, c)| acc.add(&m.scale(c)));
                expm(&a).unwrap()
            })
            .collect();
        let hol = HolonomySpec::new(gens, 1e-10).unwrap();
        let rot = rotation12(0.4);
        assert!(nf_member(&rot, &HolonomySpec::trivial(), 1e-10).unwrap());
        assert!(nf_member(&Mat::identity(7), &hol, 1e-10).unwrap());
        assert!(!nf_member(&rot, &hol, 1e-10).unwrap());
        assert_eq!(nf_member(&rot, &hol, 1e-10).unwrap(), nf_member(&Mat::identity(7), &hol.conjugated(&rot), 1e-10).unwrap());

        assert_eq!(coset_tangent_dim(&HolonomySpec::trivial(), &s).unwrap(), 7);
        let id = HolonomySpec::new(vec![Mat::identity(7)], 1e-10).unwrap();
        assert_eq!(coset_tangent_dim(&id, &s).unwrap(), 7);
        assert_eq!(coset_tangent_dim(&hol, &s).unwrap(), 0);
        let bad = HolonomySpec::new(vec![rot], 1e-10).unwrap();
        assert_eq!(coset_tangent_dim(&bad, &s), Err(G2Error::IdentityNotInNf(0)));
    }

    #[test]
    fn holonomy_json() {
        let h = HolonomySpec::new(vec![Mat::<Q>::identity(7)], 0.0).unwrap();
        assert_eq!(HolonomySpec::<Q>::from_json(&h.to_json(), 0.0).unwrap(), h);
        assert!(matches!(HolonomySpec::<Q>::from_json(&json!({"generators": [[1]]}), 0.0), Err(G2Error::Parse(_))));
        let mut two = Mat::<Q>::identity(7);
        two[(0, 0)] = Q::from_i64(2);
        assert_eq!(HolonomySpec::new(vec![two], 0.0), Err(G2Error::NotSpecialOrthogonal));
    }

    #[test]
    fn nested_rows_parse() {
        let rows: Vec<Vec<String>> = (0..7).map(|i| (0..7).map(|j| u8::from(i == j).to_string()).collect()).collect();
        assert_eq!(matrix_from_json::<Q>(&json!(rows)).unwrap(), Mat::identity(7));
        assert!(matches!(matrix_from_json::<Q>(&json!([["1", "0"], ["0", "1"]])), Err(G2Error::Parse(_))));
    }

    #[test]
    fn two_form_matrix_round_trip() {
        let beta = crate::exterior::interior(&crate::exterior::unit_vector::<Q>(1), &phi0()).unwrap();
        let m = two_form_to_matrix(&beta).unwrap();
        assert!(m.is_antisymmetric(0.0));
        assert_eq!(matrix_to_two_form(&m), beta);
    }
}
