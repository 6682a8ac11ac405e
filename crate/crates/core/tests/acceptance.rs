//! Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use g2kit::bryant::{
    derivative_rank, recover, twist, twist_decomposed, twist_derivative, TwistParams, TwistTangent,
};
use g2kit::exterior::{dx, hodge_star, interior, norm_sq, unit_vector, wedge, KForm, Metric, MultiIndex, Orientation};
use g2kit::g2core::{decompose3, infinitesimal_action, metric_from_phi, odot, phi0, t_matrix, G2Structure};
use g2kit::liegroup::{coset_tangent_dim, g2_algebra_basis, lie_normalizer, so7_basis, HolonomySpec};
use g2kit::linalg::Mat;
use g2kit::models::{gamma_sample, gamma_sample_equatorial, model_form, model_phi, sheet_count, FlatModel};
use g2kit::sampling::{random_one_form, random_unit_cube, rational_twist_point, rng};
use g2kit::{Rational, Scalar};
use serde_json::Value;

type Q = Rational;

fn q(n: i64) -> Q {
    Q::from_i64(n)
}

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn params(c: Q, w: &[Q]) -> TwistParams<Q> {
    TwistParams::new(c, KForm::one_form(w), &Metric::euclidean()).expect("sphere point")
}

fn c1_phi0_well_formed() -> Outcome {
    let phi = phi0::<Q>();
    let (m, o) = metric_from_phi(&phi, 0.0).map_err(|e| e.to_string())?;
    ensure(m.matrix() == &Mat::identity(7), "metric of phi0 is not the identity")?;
    ensure(o == Orientation::Positive, "orientation of phi0 is not +1")?;
    // <phi0, phi0> from the coefficients: seven terms of absolute value one
    let sq = phi.coeffs().iter().fold(q(0), |a, x| a + x.clone() * x.clone());
    ensure(sq == q(7), format!("<phi0, phi0> = {sq}"))?;
    let s = G2Structure::<Q>::standard();
    ensure(s.inner(&phi, &phi).unwrap() == q(7), "metric inner product disagrees")?;
    Ok("metric = I, orientation +1, <phi0, phi0> = 7".into())
}

fn c2_representation_dimensions() -> Outcome {
    let s = G2Structure::<Q>::standard();
    let t = t_matrix(s.phi(), s.metric(), s.orientation()).unwrap();
    // eigenvector oracles: e1 ⌟ phi0 and dx23 - dx45
    let seven = interior(&unit_vector(1), s.phi()).unwrap();
    let fourteen = KForm::from_terms(2, &[(&[2, 3], q(1)), (&[4, 5], q(-1))]).unwrap();
    let apply = |b: &KForm<Q>| KForm::from_coeffs(2, t.mul_vec(b.coeffs())).unwrap();
    let (l7, l14) = (s.lambda7().clone(), s.lambda14().clone());
    ensure(apply(&seven) == seven.scale(&l7), "e1 ⌟ phi0 is not a lambda7 eigenvector")?;
    ensure(apply(&fourteen) == fourteen.scale(&l14), "dx23 - dx45 is not a lambda14 eigenvector")?;
    let t2 = t.mul(&t);
    let min_poly = t2.sub(&t.scale(&(l7.clone() + l14.clone()))).add(&Mat::identity(21).scale(&(l7.clone() * l14.clone())));
    ensure(min_poly.data().iter().all(|x| x.is_zero()), "(T - l7)(T - l14) != 0")?;
    let d7 = 21 - t.sub(&Mat::identity(21).scale(&l7)).rank();
    let d14 = 21 - t.sub(&Mat::identity(21).scale(&l14)).rank();
    ensure((d7, d14) == (7, 14), format!("eigenspace dimensions {d7}, {d14}"))?;

    let mut cols: [Vec<Vec<Q>>; 3] = Default::default();
    for &idx in MultiIndex::all(3) {
        let d = decompose3(&KForm::basis(idx), &s).unwrap();
        cols[0].push(d.p1.coeffs().to_vec());
        cols[1].push(d.p7.coeffs().to_vec());
        cols[2].push(d.p27.coeffs().to_vec());
    }
    let ranks: Vec<usize> = cols.iter().map(|c| Mat::from_columns(35, c).rank()).collect();
    ensure(ranks == [1, 7, 27], format!("projector ranks {ranks:?}"))?;
    Ok(format!("eigenvalues {l7} (dim 7), {l14} (dim 14); projector ranks 1, 7, 27"))
}

fn c3_pi1_law() -> Outcome {
    let s = G2Structure::<Q>::standard();
    let mut r = rng(3);
    for n in 0..100 {
        let w: KForm<Q> = random_one_form(&mut r);
        let eta = wedge(&w, &s.star(&wedge(&w, s.psi()).unwrap())).unwrap();
        let expected = s.phi().scale(&(Q::from_ratio(3, 7) * norm_sq(&w, s.metric())));
        // projection onto phi directly, and through the full decomposition
        let direct = s.phi().scale(&(s.inner(&eta, s.phi()).unwrap() / q(7)));
        ensure(direct == expected, format!("case {n}: direct projection differs"))?;
        ensure(decompose3(&eta, &s).unwrap().p1 == expected, format!("case {n}: decompose3 differs"))?;
    }
    Ok("100 random exact 1-forms".into())
}

fn c4_hodge_identity() -> Outcome {
    let s = G2Structure::<Q>::standard();
    let m = Metric::<Q>::euclidean();
    let star = |a: &KForm<Q>| hodge_star(a, &m, Orientation::Positive);
    let lhs = |a: &KForm<Q>| wedge(s.psi(), &star(&wedge(s.psi(), a).unwrap())).unwrap();
    let sign = if lhs(&dx(1)) == star(&dx(1)).scale(&q(3)) { q(1) } else { q(-1) };
    ensure(lhs(&dx(1)) == star(&dx(1)).scale(&(q(3) * sign.clone())), "dx1 fits neither sign")?;
    let mut r = rng(4);
    for n in 0..100 {
        let a: KForm<Q> = random_one_form(&mut r);
        ensure(lhs(&a) == star(&a).scale(&(q(3) * sign.clone())), format!("case {n} fails"))?;
    }
    Ok(format!("global sign {sign}, 100 random 1-forms"))
}

fn c5_twist_suite() -> Outcome {
    let s = G2Structure::<Q>::standard();
    let mut r = rng(5);
    let mut zero_c = 0;
    for n in 0..100 {
        let force = n % 10 == 0;
        let (c, w) = rational_twist_point(&mut r, 7, force);
        zero_c += usize::from(c == q(0));
        let p = params(c.clone(), &w);
        let phit = twist(&s, &p).unwrap();
        let (m, o) = metric_from_phi(&phit, 0.0).unwrap();
        ensure(m.matrix() == &Mat::identity(7) && o == Orientation::Positive, format!("case {n}: metric changed"))?;
        ensure(twist_decomposed(&s, &p).unwrap() == decompose3(&phit, &s).unwrap(), format!("case {n}: components differ"))?;
        let dot = phit.coeffs().iter().zip(s.phi().coeffs()).fold(q(0), |a, (x, y)| a + x.clone() * y.clone());
        ensure(dot == q(8) * c.clone() * c.clone() - q(1), format!("case {n}: <phit, phi0> != 8c^2 - 1"))?;
        let rec = recover(&s, &phit).map_err(|e| format!("case {n}: {e}"))?;
        ensure(rec.params.equivalent(&p, 0.0), format!("case {n}: recovered a different point"))?;
    }
    ensure(zero_c >= 10, format!("only {zero_c} points with c = 0"))?;
    Ok(format!("100 rational points, {zero_c} with c = 0"))
}

fn c6_derivative_suite() -> Outcome {
    let sf = G2Structure::<f64>::standard();
    let mut r = rng(6);
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for n in 0..50 {
        let mut base = random_unit_cube(&mut r, 8);
        if n % 5 == 0 {
            base[0] = 0.0;
        }
        let nb = base.iter().map(|x| x * x).sum::<f64>().sqrt();
        base.iter_mut().for_each(|x| *x /= nb);
        let mut v = random_unit_cube(&mut r, 8);
        let k: f64 = v.iter().zip(&base).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&base).for_each(|(x, b)| *x -= k * b);
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        let at = |t: f64| {
            let pt: Vec<f64> = base.iter().zip(&v).map(|(b, d)| b * t.cos() + d * t.sin()).collect();
            TwistParams::new(pt[0], KForm::one_form(&pt[1..]), sf.metric()).unwrap()
        };
        let fd = twist(&sf, &at(h)).unwrap().sub(&twist(&sf, &at(-h)).unwrap()).scale(&(0.5 / h));
        let t = TwistTangent::new(v[0], KForm::one_form(&v[1..])).unwrap();
        let analytic = twist_derivative(&sf, &at(0.0), &t).unwrap();
        let scale = analytic.coeffs().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        worst = worst.max(analytic.max_abs_diff(&fd) / scale);
    }
    ensure(worst <= 1e-6, format!("finite-difference relative error {worst:e}"))?;

    let s = G2Structure::<Q>::standard();
    for n in 0..20 {
        let (_, w0) = rational_twist_point(&mut r, 7, true);
        let raw = random_one_form::<Q>(&mut r).coeffs().to_vec();
        let k = w0.iter().zip(&raw).fold(q(0), |a, (x, y)| a + x.clone() * y.clone());
        let wd: Vec<Q> = raw.iter().zip(&w0).map(|(y, x)| y.clone() - k.clone() * x.clone()).collect();
        let hsym = Mat::from_fn(7, 7, |i, j| wd[i].clone() * w0[j].clone() + w0[i].clone() * wd[j].clone());
        let (wd_f, w0_f) = (KForm::one_form(&wd), KForm::one_form(&w0));
        let pair = |a: &KForm<Q>, b: &KForm<Q>| wedge(a, &s.star(&wedge(b, s.psi()).unwrap())).unwrap();
        let sum = pair(&wd_f, &w0_f).add(&pair(&w0_f, &wd_f));
        ensure(sum == odot(&hsym, &s).unwrap(), format!("case {n}: h ⊙ phi identity fails"))?;
        let d = twist_derivative(&s, &params(q(0), &w0), &TwistTangent::new(q(0), wd_f).unwrap()).unwrap();
        ensure(d == sum.scale(&q(2)), format!("case {n}: equatorial derivative differs"))?;
    }

    let mut margin = f64::INFINITY;
    for n in 0..20 {
        let (c, w) = rational_twist_point(&mut r, 7, n % 4 == 0);
        let d = derivative_rank(&s, &params(c, &w), 7).unwrap();
        ensure(d.rank == 7, format!("point {n}: rank {}", d.rank))?;
        margin = margin.min(d.min_singular_value());
    }
    Ok(format!("FD relative error {worst:.2e}; identity exact; rank 7 at 20 points, min singular value {margin:.3}"))
}

fn c7_lie_suite() -> Outcome {
    let s = G2Structure::<Q>::standard();
    let g2 = g2_algebra_basis(&s).unwrap();
    ensure(g2.dim() == 14 && g2.is_bracket_closed(), "g2 is not a 14-dimensional subalgebra")?;
    let so7 = so7_basis::<Q>();
    let n = lie_normalizer(&so7, &g2, 0.0).unwrap();
    ensure(n.dim() == 14 && n.contains_all(&g2), format!("normalizer has dimension {}", n.dim()))?;
    let cols: Vec<Vec<Q>> = so7.matrices().iter().map(|a| infinitesimal_action(a, &s).unwrap().coeffs().to_vec()).collect();
    let kernel = Mat::from_columns(35, &cols).nullspace(0.0);
    ensure(kernel.len() == 14, format!("kernel dimension {}", kernel.len()))?;
    for k in &kernel {
        let a = so7.matrices().iter().zip(k).fold(Mat::zeros(7, 7), |acc, (m, c)| acc.add(&m.scale(c)));
        ensure(g2.contains(&a), "kernel element outside g2")?;
    }
    let d = coset_tangent_dim(&HolonomySpec::<Q>::trivial(), &s).unwrap();
    ensure(d == 7, format!("coset tangent dimension {d}"))?;
    Ok("dim g2 = 14, normalizer 14, action kernel = g2, coset dim 7".into())
}

fn c8_models_suite() -> Outcome {
    for m in FlatModel::ALL {
        ensure(model_form::<Q>(m).unwrap() == phi0(), format!("{m} form differs from phi0"))?;
        let s = model_phi::<Q>(m).unwrap();
        for seed in 0..5 {
            let p = if seed == 0 { gamma_sample_equatorial::<Q>(m, seed) } else { gamma_sample::<Q>(m, seed) };
            let d = derivative_rank(&s, &p.params, m.b1()).unwrap();
            ensure(d.rank == m.b1(), format!("{m}: rank {} != b1 {}", d.rank, m.b1()))?;
        }
    }
    let p = gamma_sample::<Q>(FlatModel::T7, 8);
    let mut r = rng(8);
    let ts: Vec<Vec<Q>> = (0..100).map(|_| random_one_form::<Q>(&mut r).coeffs().to_vec()).collect();
    let sheets = sheet_count(FlatModel::T7, &p, &ts, 0.0).unwrap();
    ensure(sheets == 1, format!("{sheets} sheets"))?;
    Ok("three models equal phi0; ranks 7, 1, 3; t7 sheets = 1".into())
}

fn c9_cli_contract() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_g2kit");
    let dir = std::env::temp_dir().join(format!("g2kit-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;

    let start = Instant::now();
    let out = Command::new(bin).args(["selftest", "--output", "json"]).output().map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(out.status.code() == Some(0), format!("selftest exit {:?}", out.status.code()))?;
    let report: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let assertions = report["assertions"].as_array().ok_or("no assertions")?;
    ensure(assertions.iter().all(|a| a["pass"] == Value::Bool(true)), "a selftest invariant failed")?;
    for section in ["exterior", "g2core", "bryant", "liegroup", "models"] {
        let count = assertions.iter().filter(|a| a["name"].as_str().is_some_and(|n| n.starts_with(section))).count();
        ensure(count > 0, format!("selftest lists nothing for {section}"))?;
    }
    ensure(secs < 60.0, format!("selftest took {secs:.1} s"))?;

    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"degree\": 3, \"entries\": [").map_err(|e| e.to_string())?;
    let code = Command::new(bin).arg("decompose").arg(&bad).args(["--degree", "3"]).output().map_err(|e| e.to_string())?.status.code();
    ensure(code == Some(2), format!("malformed input exit {code:?}"))?;

    let code = Command::new(bin).args(["twist", "--c", "1", "--omega", "1,0,0,0,0,0,0"]).output().map_err(|e| e.to_string())?.status.code();
    ensure(code == Some(1), format!("constraint violation exit {code:?}"))?;
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("selftest exit 0 with {} invariants in {secs:.1} s; malformed → 2; bad twist → 1", assertions.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 phi0 well-formedness", c1_phi0_well_formed),
        ("2 representation dimensions", c2_representation_dimensions),
        ("3 pi1 law", c3_pi1_law),
        ("4 Hodge identity", c4_hodge_identity),
        ("5 twist suite", c5_twist_suite),
        ("6 derivative suite", c6_derivative_suite),
        ("7 Lie suite", c7_lie_suite),
        ("8 models suite", c8_models_suite),
        ("9 CLI contract", c9_cli_contract),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({secs:.1} s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({secs:.1} s) {detail}");
            }
        }
    }
    println!("acceptance: {}/9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
