//! Exact and floating scalars behind one trait.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Exact rational.
pub type Q = BigRational;

/// Comparison tolerance used in float mode.
pub const TOLERANCE: f64 = 1e-9;

pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + Send + Sync + 'static {
    fn from_q(q: &Q) -> Self;
    fn to_f64(&self) -> f64;
    /// Zero test: exact for rationals, within [`TOLERANCE`] for floats.
    fn near_zero(&self) -> bool;

    fn near(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).near_zero()
    }

    fn le_tol(&self, other: &Self) -> bool {
        self <= other || self.near(other)
    }
}

impl Scalar for Q {
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn near_zero(&self) -> bool {
        self.is_zero()
    }
}

impl Scalar for f64 {
    fn from_q(q: &Q) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn near_zero(&self) -> bool {
        self.abs() <= TOLERANCE
    }
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `a`, `a/b`, or a plain decimal such as `0.35` (taken as the exact decimal).
pub fn parse_q(s: &str) -> Result<Q, Error> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a rational literal: {s:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        if !fp.chars().all(|c| c.is_ascii_digit()) || !ip.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let v = Q::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

/// `num/den`, or just `num` for integers.
pub fn fmt_q(v: &Q) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Nearest rational with the given denominator.
pub fn rationalize(x: f64, den: i64) -> Q {
    let n = (x * den as f64).round() as i64;
    q(n, den)
}

/// Last continued-fraction convergent of `x` with denominator at most `max_den`.
pub fn approximate(x: f64, max_den: i64) -> Q {
    if !x.is_finite() {
        return Q::zero();
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (p2, q2) = (
            a.saturating_mul(p1).saturating_add(p0),
            a.saturating_mul(q1).saturating_add(q0),
        );
        if q2 > max_den || q2 <= 0 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a as f64;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    if q1 == 0 {
        return q(x.round() as i64, 1);
    }
    q(p1, q1)
}

pub fn q_from_f64(x: f64) -> Option<Q> {
    Q::from_float(x)
}
