//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed assertion or validation, 2 parse or I/O
//! failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bryant::{recover, twist, twist_decomposed, TwistParams};
use crate::error::G2Error;
use crate::exterior::{KForm, DIM};
use crate::g2core::{decompose2, decompose3, infinitesimal_action, metric_from_phi, phi0, G2Structure};
use crate::liegroup::{
    coset_tangent_dim, g2_algebra_basis, is_g2, is_so7, lie_normalizer, matrix_from_json, nf_member, so7_basis,
    HolonomySpec,
};
use crate::linalg::Mat;
use crate::models::{
    gamma_membership, gamma_sample, gamma_sample_equatorial, holonomy_sample, model_derivative_rank, model_phi,
    sheet_count, su3_phase_probe, twist_model, FlatModel,
};
use crate::report::Report;
use crate::sampling::{random_one_form, rng};
use crate::scalar::{Mode, Rational, Scalar, DEFAULT_TOL};
use crate::selftest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "g2kit", version, about = "Pointwise G2 linear algebra: decompositions, twists, recovery, G2 checks")]
pub struct Cli {
    /// Arithmetic mode for the whole computation.
    #[arg(long, global = true, env = "G2KIT_MODE", default_value = "exact")]
    pub mode: Mode,
    /// Equality tolerance in float mode.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Seed for every random sample.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub output: OutputFormat,
    /// Flat model: t7, s1xcy3 or t3xk3.
    #[arg(long, global = true)]
    pub model: Option<FlatModel>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a 2- or 3-form into its G2 type components.
    Decompose {
        /// Form JSON file, or `-` for stdin.
        file: PathBuf,
        #[arg(long)]
        degree: usize,
    },
    /// Twist the model form by (c, omega).
    Twist {
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        /// Seven comma-separated components of omega.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "omega_file")]
        omega: Option<String>,
        /// 1-form JSON file for omega.
        #[arg(long)]
        omega_file: Option<PathBuf>,
    },
    /// Recover canonical (c, omega) from a 3-form with the model's metric.
    Recover { file: PathBuf },
    /// Test a 7x7 matrix (49 row-major scalars) for membership in SO(7) and G2.
    G2check {
        file: PathBuf,
        /// Holonomy generators {"generators": [...]} for an N_f membership test.
        #[arg(long)]
        holonomy: Option<PathBuf>,
    },
    /// Normalizer of g2 in so(7) and related dimensions.
    Normalizer,
    /// Parameter space of a flat model.
    Demo,
    /// Run the full invariant suite.
    Selftest,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Invalid(G2Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Invalid(G2Error::Parse(_)) => 2,
            CliError::Invalid(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(s) => write!(f, "{s}"),
            CliError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl From<G2Error> for CliError {
    fn from(e: G2Error) -> Self {
        CliError::Invalid(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Global options echoed into every report.
#[derive(Clone, Debug)]
pub struct CliConfig {
    pub mode: Mode,
    pub tol: f64,
    pub seed: u64,
    pub output: OutputFormat,
    pub model: FlatModel,
}

impl CliConfig {
    fn to_json(&self) -> Value {
        json!({
            "mode": self.mode,
            "tol": self.tol,
            "seed": self.seed,
            "output": match self.output { OutputFormat::Json => "json", OutputFormat::Text => "text" },
            "model": self.model.tag(),
        })
    }

    fn report(&self, command: &str) -> Report {
        Report::new(command, self.to_json())
    }
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut std::io::stdin(), &mut buf).map_err(|e| CliError::Input(format!("stdin: {e}")))?;
        return Ok(buf);
    }
    fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_json(bytes: &[u8]) -> CliResult<Value> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Input(format!("malformed JSON: {e}")))
}

fn parse_scalar<S: Scalar>(s: &str) -> CliResult<S> {
    let v = match S::MODE {
        Mode::Exact => Value::String(s.trim().to_string()),
        Mode::Float => s.trim().parse::<f64>().map(|x| json!(x)).unwrap_or_else(|_| Value::String(s.trim().into())),
    };
    S::from_json(&v).map_err(|e| CliError::Input(e.to_string()))
}

/// Runs a parsed command line and returns the report.
pub fn run(cli: Cli) -> CliResult<Report> {
    if !(cli.tol > 0.0) {
        return Err(CliError::Invalid(G2Error::Dimension("--tol must be positive".into())));
    }
    let cfg = CliConfig {
        mode: cli.mode,
        tol: cli.tol,
        seed: cli.seed,
        output: cli.output,
        model: cli.model.unwrap_or(FlatModel::T7),
    };
    match cfg.mode {
        Mode::Exact => dispatch::<Rational>(&cfg, cli.command),
        Mode::Float => dispatch::<f64>(&cfg, cli.command),
    }
}

fn dispatch<S: Scalar>(cfg: &CliConfig, command: Command) -> CliResult<Report> {
    match command {
        Command::Decompose { file, degree } => cmd_decompose::<S>(cfg, &file, degree),
        Command::Twist { c, omega, omega_file } => cmd_twist::<S>(cfg, &c, omega.as_deref(), omega_file.as_deref()),
        Command::Recover { file } => cmd_recover::<S>(cfg, &file),
        Command::G2check { file, holonomy } => cmd_g2check::<S>(cfg, &file, holonomy.as_deref()),
        Command::Normalizer => cmd_normalizer::<S>(cfg),
        Command::Demo => cmd_demo::<S>(cfg),
        Command::Selftest => cmd_selftest(cfg),
    }
}

fn structure<S: Scalar>(cfg: &CliConfig) -> CliResult<G2Structure<S>> {
    Ok(G2Structure::with_tol(model_phi::<S>(cfg.model)?.phi().clone(), cfg.tol)?)
}

pub fn cmd_decompose<S: Scalar>(cfg: &CliConfig, file: &Path, degree: usize) -> CliResult<Report> {
    let bytes = read_input(file)?;
    let mut rep = cfg.report("decompose");
    rep.digest_inputs(&[&bytes]);
    if degree != 2 && degree != 3 {
        return Err(CliError::Invalid(G2Error::Dimension(format!("decompose supports degree 2 or 3, not {degree}"))));
    }
    let form = KForm::<S>::from_json(&parse_json(&bytes)?)?;
    if form.degree() != degree {
        return Err(CliError::Invalid(G2Error::DegreeMismatch { expected: degree, got: form.degree() }));
    }
    let s = structure::<S>(cfg)?;
    let (parts, sum): (Vec<(&str, KForm<S>)>, KForm<S>) = if degree == 2 {
        let d = decompose2(&form, &s)?;
        let sum = d.sum();
        (vec![("p7", d.p7), ("p14", d.p14)], sum)
    } else {
        let d = decompose3(&form, &s)?;
        let sum = d.sum();
        (vec![("p1", d.p1), ("p7", d.p7), ("p27", d.p27)], sum)
    };
    let mut norms = serde_json::Map::new();
    for (name, p) in &parts {
        rep.output(name, p.to_json());
        norms.insert(name.to_string(), json!(s.inner(p, p)?.to_f64().sqrt()));
    }
    rep.output("norms", Value::Object(norms));
    let residual = sum.max_abs_diff(&form);
    rep.residual("reconstruction", residual);
    rep.check("components sum to the input", sum.approx_eq(&form, cfg.tol), residual);
    let mut worst = 0.0_f64;
    for (i, (_, a)) in parts.iter().enumerate() {
        for (_, b) in &parts[i + 1..] {
            worst = worst.max(s.inner(a, b)?.to_f64().abs());
        }
    }
    rep.check("components are pairwise orthogonal", worst <= tol_for::<S>(cfg), worst);
    Ok(rep)
}

fn tol_for<S: Scalar>(cfg: &CliConfig) -> f64 {
    match S::MODE {
        Mode::Exact => 0.0,
        Mode::Float => cfg.tol,
    }
}

fn parse_omega<S: Scalar>(inline: Option<&str>, file: Option<&Path>) -> CliResult<(KForm<S>, Vec<u8>)> {
    match (inline, file) {
        (Some(text), _) => {
            let parts: Vec<&str> = text.split(',').collect();
            if parts.len() != DIM {
                return Err(CliError::Input(format!("--omega needs 7 comma-separated values, got {}", parts.len())));
            }
            let w = parts.iter().map(|p| parse_scalar::<S>(p)).collect::<CliResult<Vec<S>>>()?;
            Ok((KForm::one_form(&w), text.as_bytes().to_vec()))
        }
        (None, Some(path)) => {
            let bytes = read_input(path)?;
            let form = KForm::<S>::from_json(&parse_json(&bytes)?)?;
            if form.degree() != 1 {
                return Err(CliError::Invalid(G2Error::DegreeMismatch { expected: 1, got: form.degree() }));
            }
            Ok((form, bytes))
        }
        (None, None) => Ok((KForm::zero(1), Vec::new())),
    }
}

pub fn cmd_twist<S: Scalar>(cfg: &CliConfig, c: &str, omega: Option<&str>, omega_file: Option<&Path>) -> CliResult<Report> {
    let c_val = parse_scalar::<S>(c)?;
    let (w, bytes) = parse_omega::<S>(omega, omega_file)?;
    let mut rep = cfg.report("twist");
    rep.digest_inputs(&[c.as_bytes(), &bytes]);
    let s = structure::<S>(cfg)?;
    let p = TwistParams::new(c_val.clone(), w, s.metric())?;
    let phit = twist(&s, &p)?;
    rep.output("params", p.to_json());
    rep.output("phit", phit.to_json());

    let (m, o) = metric_from_phi(&phit, cfg.tol)?;
    let metric_residual = m.matrix().sub(s.metric().matrix()).max_abs();
    rep.residual("metric", metric_residual);
    rep.check(
        "twisted form induces the same metric and orientation",
        metric_residual <= tol_for::<S>(cfg) && o == s.orientation(),
        metric_residual,
    );
    let d = twist_decomposed(&s, &p)?;
    rep.output("p1", d.p1.to_json());
    rep.output("p7", d.p7.to_json());
    rep.output("p27", d.p27.to_json());
    let sum_residual = d.sum().max_abs_diff(&phit);
    rep.check("closed-form components sum to the twist", sum_residual <= tol_for::<S>(cfg), sum_residual);
    let lhs = s.inner(&phit, s.phi())?;
    let rhs = S::from_i64(8) * c_val.clone() * c_val - S::one();
    let r = (lhs.clone() - rhs).to_f64().abs();
    rep.output("phit_dot_phi", lhs.to_json());
    rep.check("<phit, phi> = 8c^2 - 1", r <= tol_for::<S>(cfg), r);
    Ok(rep)
}

pub fn cmd_recover<S: Scalar>(cfg: &CliConfig, file: &Path) -> CliResult<Report> {
    let bytes = read_input(file)?;
    let mut rep = cfg.report("recover");
    rep.digest_inputs(&[&bytes]);
    let v = parse_json(&bytes)?;
    // accept either a bare form or a twist report
    let form_json = v.get("outputs").and_then(|o| o.get("phit")).unwrap_or(&v);
    let phit = KForm::<S>::from_json(form_json)?;
    let s = structure::<S>(cfg)?;
    let rec = recover(&s, &phit)?;
    rep.output("params", rec.to_json());
    rep.residual("recovery", rec.residual);
    let limit = match S::MODE {
        Mode::Exact => 0.0,
        Mode::Float => crate::bryant::RECOVERY_TOL,
    };
    rep.check("twist of the recovered parameters reproduces the input", rec.residual <= limit, rec.residual);
    if cfg.model != FlatModel::T7 {
        let g = gamma_membership(cfg.model, &phit, cfg.tol)?;
        rep.output("gamma_point", g.to_json());
    }
    Ok(rep)
}

pub fn cmd_g2check<S: Scalar>(cfg: &CliConfig, file: &Path, holonomy: Option<&Path>) -> CliResult<Report> {
    let bytes = read_input(file)?;
    let mut rep = cfg.report("g2check");
    let v = parse_json(&bytes)?;
    let g: Mat<S> = matrix_from_json(v.get("matrix").unwrap_or(&v))?;
    let orth = g.transpose().mul(&g).sub(&Mat::identity(DIM)).max_abs();
    let det = (g.det() - S::one()).to_f64().abs();
    let so7 = is_so7(&g, cfg.tol);
    rep.output("so7", json!(so7));
    rep.residual("orthogonality", orth);
    rep.residual("determinant", det);
    let phi = phi0::<S>();
    let moved = if so7 { crate::liegroup::act(&g, &phi)?.max_abs_diff(&phi) } else { f64::INFINITY };
    rep.residual("phi0", moved);
    rep.output("member", json!(is_g2(&g, cfg.tol)));
    let mut inputs = vec![bytes.clone()];
    if let Some(h) = holonomy {
        let hb = read_input(h)?;
        let spec = HolonomySpec::<S>::from_json(&parse_json(&hb)?, cfg.tol)?;
        rep.output("nf_member", json!(nf_member(&g, &spec, cfg.tol)?));
        inputs.push(hb);
    }
    let refs: Vec<&[u8]> = inputs.iter().map(Vec::as_slice).collect();
    rep.digest_inputs(&refs);
    Ok(rep)
}

pub fn cmd_normalizer<S: Scalar>(cfg: &CliConfig) -> CliResult<Report> {
    let mut rep = cfg.report("normalizer");
    let s = G2Structure::<S>::with_tol(phi0(), cfg.tol)?;
    let g2 = g2_algebra_basis(&s)?;
    let so7 = so7_basis::<S>();
    let n = lie_normalizer(&so7, &g2, cfg.tol)?;
    rep.output("dim_g2", json!(g2.dim()));
    rep.output("dim_so7", json!(so7.dim()));
    rep.output("dim_normalizer", json!(n.dim()));
    rep.check("dim g2 = 14", g2.dim() == 14, 0.0);
    rep.check("g2 is bracket closed", g2.is_bracket_closed(), 0.0);
    rep.check("normalizer of g2 in so(7) equals g2", n.dim() == 14 && n.contains_all(&g2), 0.0);
    let mut worst = 0.0_f64;
    for a in g2.matrices() {
        worst = worst.max(infinitesimal_action(a, &s)?.coeff_norm());
    }
    rep.check("g2 acts trivially on phi", worst <= tol_for::<S>(cfg), worst);
    let d = coset_tangent_dim(&HolonomySpec::<S>::trivial(), &s)?;
    rep.output("coset_tangent_dim_trivial", json!(d));
    rep.check("coset tangent dimension for trivial holonomy is 7", d == 7, 0.0);
    Ok(rep)
}

pub fn cmd_demo<S: Scalar>(cfg: &CliConfig) -> CliResult<Report> {
    let m = cfg.model;
    let mut rep = cfg.report("demo");
    rep.output("model", json!(m.tag()));
    rep.output("holonomy", json!(m.holonomy_label()));
    rep.output("b1", json!(m.b1()));
    let span = if m.b1() == 1 { "dx1".to_string() } else { format!("dx1..dx{}", m.b1()) };
    rep.output("gamma", json!(format!("RP^{}: (c, omega) in the unit sphere of R x span{{{span}}} modulo (c, omega) ~ (-c, -omega)", m.b1())));

    let mut points = Vec::new();
    let mut worst = 0.0_f64;
    let mut all_ok = true;
    let mut rank_ok = true;
    for k in 0..4u64 {
        let seed = cfg.seed.wrapping_add(k);
        let p = if k == 3 { gamma_sample_equatorial::<S>(m, seed) } else { gamma_sample::<S>(m, seed) };
        let phit = twist_model(&p)?;
        match gamma_membership(m, &phit, cfg.tol) {
            Ok(back) => {
                let r = twist_model(&back)?.max_abs_diff(&phit);
                worst = worst.max(r);
                all_ok &= back.equivalent(&p, tol_for::<S>(cfg).max(if S::MODE == Mode::Float { 1e-9 } else { 0.0 }));
            }
            Err(_) => all_ok = false,
        }
        let rank = model_derivative_rank(&p)?;
        rank_ok &= rank.rank == m.b1();
        points.push(json!({"point": p.to_json(), "derivative_rank": rank.rank, "min_singular_value": rank.min_singular_value()}));
    }
    rep.output("samples", Value::Array(points));
    rep.residual("round_trip", worst);
    rep.check("parameter round trip closes", all_ok, worst);
    rep.check(&format!("derivative rank equals b1 = {}", m.b1()), rank_ok, 0.0);

    let sf = G2Structure::<f64>::standard();
    let hol = holonomy_sample(m, cfg.seed, 3)?;
    let d = coset_tangent_dim(&hol, &sf)?;
    rep.output("coset_tangent_dim", json!(d));
    rep.check("coset tangent dimension of sampled holonomy equals b1", d == m.b1(), 0.0);

    let mut summary = format!("b1={}", m.b1());
    match m {
        FlatModel::T7 => {
            let p = gamma_sample::<S>(m, cfg.seed);
            let mut r = rng(cfg.seed);
            let ts: Vec<Vec<S>> = (0..100).map(|_| random_one_form::<S>(&mut r).coeffs().to_vec()).collect();
            let sheets = sheet_count(m, &p, &ts, cfg.tol)?;
            rep.output("sheets", json!(sheets));
            rep.check("translation orbits are singletons", sheets == 1, 0.0);
            summary.push_str(&format!(", sheets={sheets}"));
        }
        FlatModel::S1xCY3 => {
            let probes: Vec<Value> = [(0.6, 0.8), (0.0, 1.0), (0.28, 0.96)]
                .iter()
                .map(|&(c, s)| {
                    su3_phase_probe(c, s).map(|p| {
                        json!({"c": p.c, "s": p.s, "phase": p.angle, "minus_two_atan2_s_c": -2.0 * s.atan2(c), "fit_residual": p.residual})
                    })
                })
                .collect::<Result<_, _>>()?;
            rep.output("exploratory_su3_phase", Value::Array(probes));
        }
        FlatModel::T3xK3 => {}
    }
    rep.output("summary", json!(summary));
    Ok(rep)
}

pub fn cmd_selftest(cfg: &CliConfig) -> CliResult<Report> {
    let mut rep = cfg.report("selftest");
    for a in selftest::run_all(cfg.seed) {
        rep.push(a);
    }
    let passed = rep.assertions.iter().filter(|a| a.pass).count();
    rep.output("summary", json!(format!("{passed}/{} invariants passed", rep.assertions.len())));
    Ok(rep)
}

/// Renders the report in the requested format.
pub fn render(rep: &Report, output: OutputFormat) -> String {
    match output {
        OutputFormat::Json => serde_json::to_string_pretty(&rep.to_json()).expect("json"),
        OutputFormat::Text => rep.to_text(),
    }
}
