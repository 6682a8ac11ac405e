//! Scalar field abstraction.
//!
//! A whole computation runs in one mode: exact rationals ([`Rational`]) or
//! `f64`. The mode is carried by the type parameter of every form, metric and
//! structure, so the two never mix inside one value graph.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{G2Error, Result};

/// Exact arbitrary-precision rational.
pub type Rational = num_rational::BigRational;

/// Default equality tolerance in float mode.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Arithmetic mode of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for Mode {
    type Err = G2Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(G2Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    /// `None` in exact mode: floats never silently enter an exact computation.
    fn from_f64(x: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;

    /// Exact mode: literal zero. Float mode: `|x| <= tol`.
    fn is_zero_tol(&self, tol: f64) -> bool;

    fn is_zero(&self) -> bool {
        self.is_zero_tol(0.0)
    }

    /// Exact mode ignores `tol`.
    fn near(&self, other: &Self, tol: f64) -> bool {
        (self.clone() - other.clone()).is_zero_tol(tol)
    }

    /// Square root; in exact mode only when the value is a perfect rational square.
    fn sqrt_checked(&self) -> Option<Self>;

    /// Principal real `n`-th root of a positive value; exact mode needs a perfect power.
    fn nth_root_checked(&self, n: u32) -> Option<Self>;

    fn is_positive(&self) -> bool;

    fn is_negative(&self) -> bool {
        !self.is_positive() && !self.is_zero()
    }

    fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_i64(n) / Self::from_i64(d)
    }

    /// JSON encoding: `"p/q"` in exact mode, a number in float mode.
    fn to_json(&self) -> Value;

    /// Exact mode accepts only `"p/q"` (or integer) strings; float mode also takes numbers.
    fn from_json(v: &Value) -> Result<Self>;
}

/// Parses `"p/q"` or `"p"` into a rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || G2Error::Parse(format!("invalid rational `{s}`"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(n))
        }
    }
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        if k % 2 == 0 {
            return None;
        }
        return exact_root(&-n, k).map(|r| -r);
    }
    let r = n.nth_root(k);
    (r.pow(k) == *n).then_some(r)
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Exact;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn from_f64(_x: f64) -> Option<Self> {
        None
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero_tol(&self, _tol: f64) -> bool {
        Zero::is_zero(self)
    }
    fn sqrt_checked(&self) -> Option<Self> {
        self.nth_root_checked(2)
    }
    fn nth_root_checked(&self, n: u32) -> Option<Self> {
        let num = exact_root(self.numer(), n)?;
        let den = exact_root(self.denom(), n)?;
        Some(Rational::new(num, den))
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            other => Err(G2Error::Parse(format!(
                "exact mode requires \"p/q\" strings, got `{other}`"
            ))),
        }
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(x)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero_tol(&self, tol: f64) -> bool {
        f64::abs(*self) <= tol
    }
    fn sqrt_checked(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }
    fn nth_root_checked(&self, n: u32) -> Option<Self> {
        if *self >= 0.0 {
            Some(self.powf(1.0 / n as f64))
        } else if n % 2 == 1 {
            Some(-(-self).powf(1.0 / n as f64))
        } else {
            None
        }
    }
    fn is_positive(&self) -> bool {
        *self > 0.0
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| G2Error::Parse(format!("bad number `{n}`"))),
            Value::String(s) => Ok(Scalar::to_f64(&parse_rational(s)?)),
            other => Err(G2Error::Parse(format!("expected a scalar, got `{other}`"))),
        }
    }
}
