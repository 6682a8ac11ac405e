//! The invariant suite behind `g2kit selftest`.
//!
//! Every check is seeded and returns an [`Assertion`] carrying the residual
//! that decided it. Exact checks report residual 0 on success.

use std::time::Instant;

use crate::bryant::{
    derivative_rank, recover, twist, twist_decomposed, twist_derivative, TwistParams, TwistTangent,
};
use crate::error::Result;
use crate::exterior::{
    dx, form_inner, hodge_star, interior, norm_sq, wedge, KForm, Metric, MultiIndex, Orientation,
};
use crate::g2core::{
    antisymmetric_basis, decompose2, decompose3, infinitesimal_action, metric_from_phi, odot, odot_inverse,
    phi0, symmetric_basis, t_matrix, G2Structure,
};
use crate::liegroup::{
    coset_tangent_dim, g2_algebra_basis, is_g2, lie_normalizer, nf_member, so7_basis, HolonomySpec,
};
use crate::linalg::{expm, Mat};
use crate::models::{
    gamma_membership, gamma_sample, gamma_sample_equatorial, holonomy_sample, model_derivative_rank, model_form,
    sheet_count, twist_model, FlatModel,
};
use crate::report::Assertion;
use crate::sampling::{
    random_antisymmetric, random_form, random_one_form, random_symmetric, random_unit_cube, rational_twist_point,
    rng, TestRng,
};
use crate::scalar::{Rational, Scalar};

type Q = Rational;

/// Number of random cases for the exact identities.
pub const CASES: usize = 100;

fn q(n: i64) -> Q {
    Q::from_i64(n)
}

fn exact(name: &str, failures: usize, cases: usize) -> Assertion {
    Assertion::new(name, failures == 0, failures as f64).with_detail(format!("{cases} cases, {failures} failures"))
}

/// Runs every invariant. `seed` fixes all random samples.
pub fn run_all(seed: u64) -> Vec<Assertion> {
    let start = Instant::now();
    let mut out = Vec::new();
    let sections: [(&str, fn(u64) -> Result<Vec<Assertion>>); 5] = [
        ("exterior", exterior),
        ("g2core", g2core),
        ("bryant", bryant),
        ("liegroup", liegroup),
        ("models", models),
    ];
    for (name, f) in sections {
        match f(seed) {
            Ok(list) => out.extend(list.into_iter().map(|mut a| {
                a.name = format!("{name}: {}", a.name);
                a
            })),
            Err(e) => out.push(Assertion::new(format!("{name}: section completed"), false, f64::INFINITY).with_detail(e.to_string())),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    out.push(Assertion::new("selftest: wall time under 60 s", secs < 60.0, secs));
    out
}

pub fn exterior(seed: u64) -> Result<Vec<Assertion>> {
    let mut r = rng(seed);
    let m = Metric::<Q>::euclidean();
    let vol = crate::exterior::volume_form(&m, Orientation::Positive);
    let mut out = Vec::new();

    let mut fails = [0usize; 5];
    for n in 0..CASES {
        let (da, db) = (n % 4, (n / 4) % 4);
        let a: KForm<Q> = random_form(&mut r, da);
        let b: KForm<Q> = random_form(&mut r, db);
        let sign = if (da * db) % 2 == 0 { q(1) } else { q(-1) };
        if wedge(&a, &b)? != wedge(&b, &a)?.scale(&sign) {
            fails[0] += 1;
        }
        let v: Vec<Q> = random_one_form::<Q>(&mut r).coeffs().to_vec();
        let (a1, b1): (KForm<Q>, KForm<Q>) = (random_form(&mut r, 1 + n % 3), random_form(&mut r, 1 + n % 2));
        let lhs = interior(&v, &wedge(&a1, &b1)?)?;
        let s = if a1.degree() % 2 == 0 { q(1) } else { q(-1) };
        let rhs = wedge(&interior(&v, &a1)?, &b1)?.add(&wedge(&a1, &interior(&v, &b1)?)?.scale(&s));
        if lhs != rhs {
            fails[1] += 1;
        }
        let k = n % 8;
        let c: KForm<Q> = random_form(&mut r, k);
        let d: KForm<Q> = random_form(&mut r, k);
        let star_c = hodge_star(&c, &m, Orientation::Positive);
        if hodge_star(&star_c, &m, Orientation::Positive) != c {
            fails[2] += 1;
        }
        if wedge(&c, &hodge_star(&d, &m, Orientation::Positive))? != vol.scale(&form_inner(&c, &d, &m)?) {
            fails[3] += 1;
        }
        if hodge_star(&c, &m, Orientation::Negative) != star_c.neg() {
            fails[4] += 1;
        }
    }
    out.push(exact("graded commutativity of wedge", fails[0], CASES));
    out.push(exact("interior product is an antiderivation", fails[1], CASES));
    out.push(exact("star star is the identity", fails[2], CASES));
    out.push(exact("a ∧ *b = <a, b> vol", fails[3], CASES));
    out.push(exact("reversed orientation negates star", fails[4], CASES));
    Ok(out)
}

pub fn g2core(seed: u64) -> Result<Vec<Assertion>> {
    let mut r = rng(seed.wrapping_add(1));
    let s = G2Structure::<Q>::standard();
    let phi = phi0::<Q>();
    let mut out = Vec::new();

    let (metric, o) = metric_from_phi(&phi, 0.0)?;
    out.push(Assertion::new(
        "metric of phi0 is the identity with orientation +1",
        metric.matrix() == &Mat::identity(7) && o == Orientation::Positive,
        metric.matrix().sub(&Mat::identity(7)).max_abs(),
    ));
    let pp = s.inner(&phi, &phi)?;
    out.push(Assertion::new("<phi0, phi0> = 7", pp == q(7), (pp - q(7)).to_f64().abs()));
    let phi_psi = wedge(&phi, s.psi())?.sub(&s.vol().scale(&q(7)));
    out.push(Assertion::new("phi ∧ *phi = 7 vol", phi_psi.is_zero_tol(0.0), phi_psi.coeff_norm()));

    let t = t_matrix(&phi, s.metric(), s.orientation())?;
    let dim7 = 21 - t.sub(&Mat::identity(21).scale(s.lambda7())).rank();
    let dim14 = 21 - t.sub(&Mat::identity(21).scale(s.lambda14())).rank();
    out.push(
        Assertion::new("*(phi ∧ .) on 2-forms has eigenspaces of dimensions 7 and 14", (dim7, dim14) == (7, 14), 0.0)
            .with_detail(format!("lambda7 = {}, lambda14 = {}", s.lambda7(), s.lambda14())),
    );

    let mut images: [Vec<Vec<Q>>; 3] = Default::default();
    for &idx in MultiIndex::all(3) {
        let d = decompose3(&KForm::basis(idx), &s)?;
        images[0].push(d.p1.coeffs().to_vec());
        images[1].push(d.p7.coeffs().to_vec());
        images[2].push(d.p27.coeffs().to_vec());
    }
    let ranks: Vec<usize> = images.iter().map(|c| Mat::from_columns(35, c).rank()).collect();
    out.push(Assertion::new("3-form projector ranks are 1, 7, 27", ranks == [1, 7, 27], 0.0).with_detail(format!("{ranks:?}")));

    let mut fails = [0usize; 4];
    for _ in 0..CASES {
        let eta: KForm<Q> = random_form(&mut r, 3);
        let d = decompose3(&eta, &s)?;
        let orth = [s.inner(&d.p1, &d.p7)?, s.inner(&d.p1, &d.p27)?, s.inner(&d.p7, &d.p27)?];
        if d.sum() != eta || orth.iter().any(|x| !x.is_zero()) {
            fails[0] += 1;
        }
        let beta: KForm<Q> = random_form(&mut r, 2);
        let d2 = decompose2(&beta, &s)?;
        if d2.sum() != beta || !wedge(&d2.p14, s.psi())?.is_zero_tol(0.0) || !s.inner(&d2.p7, &d2.p14)?.is_zero() {
            fails[1] += 1;
        }
        let w: KForm<Q> = random_one_form(&mut r);
        let term = wedge(&w, &s.star(&wedge(&w, s.psi())?))?;
        let p1 = decompose3(&term, &s)?.p1;
        if p1 != phi.scale(&(Q::from_ratio(3, 7) * norm_sq(&w, s.metric()))) {
            fails[2] += 1;
        }
        let b = random_symmetric::<Q>(&mut r);
        if odot_inverse(&odot(&b, &s)?, &s)?.matrix() != &b {
            fails[3] += 1;
        }
    }
    out.push(exact("3-form components reconstruct and are orthogonal", fails[0], CASES));
    out.push(exact("2-form components reconstruct, p14 ∧ *phi = 0, orthogonal", fails[1], CASES));
    out.push(exact("pi1(w ∧ *(w ∧ *phi)) = (3/7)|w|^2 phi", fails[2], CASES));
    out.push(exact("odot_inverse inverts odot on symmetric matrices", fails[3], CASES));

    let col = |ms: Vec<Mat<Q>>| -> Result<Mat<Q>> {
        let cols: Vec<Vec<Q>> = ms.iter().map(|m| odot(m, &s).map(|f| f.coeffs().to_vec())).collect::<Result<_>>()?;
        Ok(Mat::from_columns(35, &cols))
    };
    let anti = col(antisymmetric_basis())?.rank();
    out.push(Assertion::new("odot on antisymmetric matrices: kernel 14, image 7", anti == 7, 0.0).with_detail(format!("rank {anti}")));
    let sym = col(symmetric_basis())?.rank();
    out.push(Assertion::new("odot on symmetric matrices is injective", sym == 28, 0.0).with_detail(format!("rank {sym}")));

    // the sign is fixed once on dx1, then checked on random 1-forms
    let hodge = |a: &KForm<Q>| -> Result<KForm<Q>> { wedge(s.psi(), &s.star(&wedge(s.psi(), a)?)) };
    let probe = hodge(&dx(1))?;
    let sign = if probe == s.star(&dx(1)).scale(&q(3)) { q(1) } else { q(-1) };
    let mut fails = 0;
    for _ in 0..CASES {
        let a: KForm<Q> = random_one_form(&mut r);
        if hodge(&a)? != s.star(&a).scale(&(q(3) * sign.clone())) {
            fails += 1;
        }
    }
    out.push(exact(&format!("*phi ∧ *(*phi ∧ a) = {}3 *a", if sign == q(1) { "" } else { "-" }), fails, CASES));
    Ok(out)
}

fn rational_params(r: &mut TestRng, ambient: usize, force_c_zero: bool) -> Result<TwistParams<Q>> {
    let (c, w) = rational_twist_point(r, ambient, force_c_zero);
    TwistParams::new(c, KForm::one_form(&w), &Metric::euclidean())
}

fn unit_sphere_point(r: &mut TestRng, force_c_zero: bool) -> (f64, Vec<f64>) {
    let mut v = random_unit_cube(r, 8);
    if force_c_zero {
        v[0] = 0.0;
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let v: Vec<f64> = v.iter().map(|x| x / n).collect();
    (v[0], v[1..].to_vec())
}

pub fn bryant(seed: u64) -> Result<Vec<Assertion>> {
    let mut r = rng(seed.wrapping_add(2));
    let s = G2Structure::<Q>::standard();
    let mut out = Vec::new();

    let mut fails = [0usize; 6];
    for n in 0..CASES {
        let p = rational_params(&mut r, 7, n % 10 == 0)?;
        let phit = twist(&s, &p)?;
        let (m, o) = metric_from_phi(&phit, 0.0)?;
        if m.matrix() != s.metric().matrix() || o != s.orientation() {
            fails[0] += 1;
        }
        if twist(&s, &p.antipode())? != phit {
            fails[1] += 1;
        }
        if twist_decomposed(&s, &p)? != decompose3(&phit, &s)? {
            fails[2] += 1;
        }
        let c = p.c().clone();
        if s.inner(&phit, s.phi())? != q(8) * c.clone() * c - q(1) {
            fails[3] += 1;
        }
        if !recover(&s, &phit).is_ok_and(|rec| rec.params.equivalent(&p, 0.0)) {
            fails[4] += 1;
        }
        if n < 20 {
            let s2 = G2Structure::new(phit.clone())?;
            let p2 = rational_params(&mut r, 7, n % 2 == 0)?;
            if !recover(&s, &twist(&s2, &p2)?).is_ok() {
                fails[5] += 1;
            }
        }
    }
    out.push(exact("twist preserves metric and orientation", fails[0], CASES));
    out.push(exact("twist is invariant under the antipode", fails[1], CASES));
    out.push(exact("closed-form components equal the projections of the twist", fails[2], CASES));
    out.push(exact("<twist, phi> = 8c^2 - 1", fails[3], CASES));
    out.push(exact("recover round-trips modulo the antipode (10 with c = 0)", fails[4], CASES));
    out.push(exact("twists of twisted structures stay in the family", fails[5], 20));

    let sf = G2Structure::<f64>::standard();
    let (h, mut worst) = (1e-5, 0.0_f64);
    for n in 0..50 {
        let (c, w) = unit_sphere_point(&mut r, n % 5 == 0);
        let base: Vec<f64> = std::iter::once(c).chain(w.iter().copied()).collect();
        let mut v = random_unit_cube(&mut r, 8);
        let k: f64 = v.iter().zip(&base).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&base).for_each(|(x, b)| *x -= k * b);
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        let at = |t: f64| {
            let pt: Vec<f64> = base.iter().zip(&v).map(|(b, d)| b * t.cos() + d * t.sin()).collect();
            TwistParams::new(pt[0], KForm::one_form(&pt[1..]), sf.metric())
        };
        let fd = twist(&sf, &at(h)?)?.sub(&twist(&sf, &at(-h)?)?).scale(&(0.5 / h));
        let tangent = TwistTangent::new(v[0], KForm::one_form(&v[1..]))?;
        let exact = twist_derivative(&sf, &at(0.0)?, &tangent)?;
        worst = worst.max(exact.max_abs_diff(&fd) / exact.coeffs().iter().fold(0.0, |m: f64, x| m.max(x.abs())));
    }
    out.push(Assertion::new("derivative matches central differences (h = 1e-5, 50 points)", worst <= 1e-6, worst));

    let mut fails = 0;
    for _ in 0..CASES / 4 {
        let p = rational_params(&mut r, 7, true)?;
        let w0 = p.omega().coeffs().to_vec();
        let raw: Vec<Q> = random_one_form::<Q>(&mut r).coeffs().to_vec();
        let k = w0.iter().zip(&raw).fold(q(0), |a, (x, y)| a + x.clone() * y.clone());
        let wd: Vec<Q> = raw.iter().zip(&w0).map(|(y, x)| y.clone() - k.clone() * x.clone()).collect();
        let t = TwistTangent::new(q(0), KForm::one_form(&wd))?;
        let hsym = Mat::from_fn(7, 7, |i, j| wd[i].clone() * w0[j].clone() + w0[i].clone() * wd[j].clone());
        if twist_derivative(&s, &p, &t)? != odot(&hsym, &s)?.scale(&q(2)) {
            fails += 1;
        }
    }
    out.push(exact("equatorial derivative is 2 h ⊙ phi with h the symmetrized product", fails, CASES / 4));

    let (mut fails, mut margin) = (0, f64::INFINITY);
    for n in 0..20 {
        let p = rational_params(&mut r, 7, n % 4 == 0)?;
        let d = derivative_rank(&s, &p, 7)?;
        margin = margin.min(d.min_singular_value());
        if d.rank != 7 {
            fails += 1;
        }
    }
    out.push(
        Assertion::new("derivative has rank 7 on the tangent space (20 points, 5 with c = 0)", fails == 0, fails as f64)
            .with_detail(format!("smallest singular value {margin:.4}")),
    );
    Ok(out)
}

pub fn liegroup(seed: u64) -> Result<Vec<Assertion>> {
    let mut r = rng(seed.wrapping_add(3));
    let s = G2Structure::<Q>::standard();
    let mut out = Vec::new();

    let g2 = g2_algebra_basis(&s)?;
    out.push(Assertion::new("dim g2 = 14 and g2 is bracket closed", g2.dim() == 14 && g2.is_bracket_closed(), 0.0));
    let so7 = so7_basis::<Q>();
    out.push(Assertion::new("dim so(7) = 21", so7.dim() == 21, 0.0));
    let n = lie_normalizer(&so7, &g2, 0.0)?;
    out.push(Assertion::new("normalizer of g2 in so(7) is g2", n.dim() == 14 && n.contains_all(&g2), 0.0).with_detail(format!("dim {}", n.dim())));

    let cols: Vec<Vec<Q>> = so7
        .matrices()
        .iter()
        .map(|a| infinitesimal_action(a, &s).map(|f| f.coeffs().to_vec()))
        .collect::<Result<_>>()?;
    let kernel = Mat::from_columns(35, &cols).nullspace(0.0);
    let kernel_mats: Vec<Mat<Q>> = kernel
        .iter()
        .map(|c| so7.matrices().iter().zip(c).fold(Mat::zeros(7, 7), |acc, (m, x)| acc.add(&m.scale(x))))
        .collect();
    let same = kernel_mats.len() == 14 && kernel_mats.iter().all(|m| g2.contains(m));
    out.push(Assertion::new("kernel of the infinitesimal action on so(7) is g2", same, 0.0));

    let sf = G2Structure::<f64>::standard();
    let g2f = g2_algebra_basis(&sf)?;
    let mut worst = 0.0_f64;
    for a in g2f.matrices() {
        for t in [0.01, 0.1, 1.0] {
            let g = expm(&a.scale(&t))?;
            let moved = crate::liegroup::act(&g, sf.phi())?;
            worst = worst.max(moved.max_abs_diff(sf.phi()));
        }
    }
    out.push(Assertion::new("exp(tA) lies in G2 for A in g2", worst < 1e-10, worst));

    let dense: Vec<Mat<f64>> = (0..4)
        .map(|_| {
            let w = random_unit_cube(&mut r, 14);
            let a = g2f.matrices().iter().zip(&w).fold(Mat::zeros(7, 7), |acc, (m, c)| acc.add(&m.scale(c)));
            expm(&a)
        })
        .collect::<Result<_>>()?;
    let hol = HolonomySpec::new(dense, 1e-10)?;
    let mut fails = 0;
    for _ in 0..10 {
        let g = expm(&random_antisymmetric::<f64>(&mut r).scale(&0.3))?;
        if nf_member(&g, &hol, 1e-9)? != nf_member(&Mat::identity(7), &hol.conjugated(&g), 1e-9)? {
            fails += 1;
        }
    }
    out.push(exact("N_f membership is conjugation covariant", fails, 10));
    let rot = expm(&so7.to_f64().matrices()[0].scale(&0.4))?;
    let pass = nf_member(&Mat::identity(7), &hol, 1e-9)? && !nf_member(&rot, &hol, 1e-9)? && !is_g2(&rot, 1e-9);
    out.push(Assertion::new("a non-G2 rotation leaves a dense G2 sample outside G2", pass, 0.0));

    let trivial = coset_tangent_dim(&HolonomySpec::trivial(), &s)?;
    out.push(Assertion::new("coset tangent dimension for trivial holonomy is 21 - 14 = 7", trivial == 7, 0.0));
    let d = coset_tangent_dim(&hol, &sf)?;
    out.push(Assertion::new("coset tangent dimension for a dense G2 sample is 0", d == 0, 0.0));
    Ok(out)
}

pub fn models(seed: u64) -> Result<Vec<Assertion>> {
    let mut out = Vec::new();
    let phi = phi0::<Q>();
    let sf = G2Structure::<f64>::standard();
    for m in FlatModel::ALL {
        let form = model_form::<Q>(m)?;
        out.push(Assertion::new(format!("{m}: model form equals phi0"), form == phi, form.max_abs_diff(&phi)));

        let (mut rank_fails, mut trip_fails) = (0, 0);
        for k in 0..10 {
            let seed_k = seed.wrapping_mul(31).wrapping_add(k);
            let p = if k % 3 == 0 { gamma_sample_equatorial::<Q>(m, seed_k) } else { gamma_sample::<Q>(m, seed_k) };
            if model_derivative_rank(&p)?.rank != m.b1() {
                rank_fails += 1;
            }
            if !gamma_membership(m, &twist_model(&p)?, 0.0).is_ok_and(|back| back.equivalent(&p, 0.0)) {
                trip_fails += 1;
            }
        }
        out.push(exact(&format!("{m}: derivative rank equals b1 = {}", m.b1()), rank_fails, 10));
        out.push(exact(&format!("{m}: parameter round trip"), trip_fails, 10));

        let hol = holonomy_sample(m, seed, 3)?;
        let d = coset_tangent_dim(&hol, &sf)?;
        out.push(
            Assertion::new(format!("{m}: coset tangent dimension for {} holonomy equals b1", m.holonomy_label()), d == m.b1(), 0.0)
                .with_detail(format!("dim {d}")),
        );
    }
    let mut r = rng(seed.wrapping_add(4));
    let p = gamma_sample::<Q>(FlatModel::T7, seed);
    let ts: Vec<Vec<Q>> = (0..CASES).map(|_| random_one_form::<Q>(&mut r).coeffs().to_vec()).collect();
    let sheets = sheet_count(FlatModel::T7, &p, &ts, 0.0)?;
    out.push(Assertion::new("t7: translation orbits are singletons, one sheet", sheets == 1, 0.0).with_detail(format!("sheets={sheets}")));
    Ok(out)
}
