//! Seeded generators for rational test data.
//!
//! Points on spheres come from inverse stereographic projection of integer
//! vectors, so `c² + |ω|² = 1` holds exactly in rational arithmetic.

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exterior::{KForm, MultiIndex, DIM};
use crate::linalg::Mat;
use crate::scalar::{Rational, Scalar};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Rational point on the unit sphere in `R^dim`, from a random integer
/// vector with entries in `-max..=max`. Coordinates are shuffled so no
/// slot is systematically the stereographic pole.
pub fn rational_sphere_point(rng: &mut TestRng, dim: usize, max: i64) -> Vec<Rational> {
    assert!(dim >= 1);
    if dim == 1 {
        return vec![q(if rng.gen_bool(0.5) { 1 } else { -1 })];
    }
    let a: Vec<i64> = (0..dim - 1).map(|_| rng.gen_range(-max..=max)).collect();
    let n: i64 = a.iter().map(|x| x * x).sum();
    let den = q(n + 1);
    let mut point: Vec<Rational> = a.iter().map(|&x| q(2 * x) / den.clone()).collect();
    point.push(q(n - 1) / den);
    point.shuffle(rng);
    point
}

/// Rational `(c, ω)` with `c² + |ω|² = 1` (Euclidean norm), `ω` supported on
/// the first `ambient` coordinates. With `force_c_zero` the point lies on the
/// equator `c = 0`.
pub fn rational_twist_point(
    rng: &mut TestRng,
    ambient: usize,
    force_c_zero: bool,
) -> (Rational, Vec<Rational>) {
    assert!((1..=DIM).contains(&ambient));
    let (c, head) = if force_c_zero {
        (q(0), rational_sphere_point(rng, ambient, 4))
    } else {
        let mut p = rational_sphere_point(rng, ambient + 1, 3);
        let c = p.remove(0);
        (c, p)
    };
    let mut omega = vec![q(0); DIM];
    omega[..ambient].clone_from_slice(&head);
    (c, omega)
}

pub fn random_rational(rng: &mut TestRng, max: i64) -> Rational {
    let n = rng.gen_range(-max..=max);
    let d = rng.gen_range(1..=3);
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Random k-form with small rational coefficients.
pub fn random_form<S: Scalar>(rng: &mut TestRng, degree: usize) -> KForm<S> {
    let coeffs = MultiIndex::all(degree)
        .iter()
        .map(|_| S::from_rational(&random_rational(rng, 4)))
        .collect();
    KForm::from_coeffs(degree, coeffs).expect("sized")
}

pub fn random_one_form<S: Scalar>(rng: &mut TestRng) -> KForm<S> {
    random_form(rng, 1)
}

/// Random 7x7 matrix with small rational entries.
pub fn random_matrix<S: Scalar>(rng: &mut TestRng) -> Mat<S> {
    Mat::from_fn(DIM, DIM, |_, _| S::from_rational(&random_rational(rng, 3)))
}

pub fn random_symmetric<S: Scalar>(rng: &mut TestRng) -> Mat<S> {
    let m = random_matrix::<S>(rng);
    m.add(&m.transpose())
}

pub fn random_antisymmetric<S: Scalar>(rng: &mut TestRng) -> Mat<S> {
    let m = random_matrix::<S>(rng);
    m.sub(&m.transpose())
}

/// Random f64 vector with entries uniform in `[-1, 1]`.
pub fn random_unit_cube(rng: &mut TestRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_are_exact() {
        let mut r = rng(7);
        for dim in 1..=8 {
            for _ in 0..20 {
                let p = rational_sphere_point(&mut r, dim, 5);
                let n = p.iter().fold(q(0), |acc, x| acc + x.clone() * x.clone());
                assert_eq!(n, q(1));
            }
        }
    }

    #[test]
    fn twist_points_respect_support() {
        let mut r = rng(1);
        for ambient in 1..=7 {
            let (c, w) = rational_twist_point(&mut r, ambient, false);
            let n = w.iter().fold(c.clone() * c, |acc, x| acc + x.clone() * x.clone());
            assert_eq!(n, q(1));
            assert!(w[ambient..].iter().all(|x| *x == q(0)));
            let (c, _) = rational_twist_point(&mut r, ambient, true);
            assert_eq!(c, q(0));
        }
    }
}
