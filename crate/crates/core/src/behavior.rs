//! Behaviors p(ab|xy) in the 4x4 block layout, correlators, non-signaling constraints.
//!
//! Entry `[2x + a][2y + b]` holds p(a,b|x,y): row block = Alice input,
//! column block = Bob input.

use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{fmt_q, parse_q, Scalar, Q};

#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct Behavior<T> {
    pub m: [[T; 4]; 4],
}

pub type BehaviorQ = Behavior<Q>;
pub type BehaviorF = Behavior<f64>;

#[inline]
pub fn idx(x: usize, a: usize) -> usize {
    2 * x + a
}

fn sgn<T: Scalar>(k: usize) -> T {
    if k % 2 == 0 {
        T::one()
    } else {
        -T::one()
    }
}

impl<T: Scalar> Behavior<T> {
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Self {
        // f(x, y, a, b)
        Behavior {
            m: std::array::from_fn(|i| std::array::from_fn(|j| f(i / 2, j / 2, i % 2, j % 2))),
        }
    }

    pub fn from_rows(rows: [[T; 4]; 4]) -> Self {
        Behavior { m: rows }
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> &T {
        &self.m[idx(x, a)][idx(y, b)]
    }

    pub fn uniform() -> Self {
        let quarter = T::one() / T::from_i64(4).unwrap();
        Self::from_fn(|_, _, _, _| quarter.clone())
    }

    /// Deterministic local behavior a = fa[x], b = fb[y].
    pub fn deterministic(fa: [usize; 2], fb: [usize; 2]) -> Self {
        Self::from_fn(|x, y, a, b| if a == fa[x] && b == fb[y] { T::one() } else { T::zero() })
    }

    /// p(ab|xy) = (1 + (-1)^{a+b+xy})/4.
    pub fn pr_box() -> Self {
        let half = T::one() / T::from_i64(2).unwrap();
        Self::from_fn(|x, y, a, b| {
            if (a + b) % 2 == (x * y) % 2 {
                half.clone()
            } else {
                T::zero()
            }
        })
    }

    pub fn flat(&self) -> Vec<T> {
        self.m.iter().flat_map(|r| r.iter().cloned()).collect()
    }

    pub fn from_flat(v: &[T]) -> Result<Self> {
        if v.len() != 16 {
            return Err(Error::InvalidBehavior(format!("expected 16 entries, got {}", v.len())));
        }
        Ok(Behavior {
            m: std::array::from_fn(|i| std::array::from_fn(|j| v[4 * i + j].clone())),
        })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Behavior<U> {
        Behavior {
            m: std::array::from_fn(|i| std::array::from_fn(|j| f(&self.m[i][j]))),
        }
    }

    pub fn to_f64(&self) -> BehaviorF {
        self.map(|v| v.to_f64())
    }

    /// Entrywise inner product with a coefficient matrix.
    pub fn dot(&self, c: &[[T; 4]; 4]) -> T {
        let mut s = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                if !c[i][j].is_zero() {
                    s = s + c[i][j].clone() * self.m[i][j].clone();
                }
            }
        }
        s
    }

    pub fn combine(&self, alpha: &T, other: &Self) -> Self {
        // alpha * self + (1 - alpha) * other
        let beta = T::one() - alpha.clone();
        Behavior {
            m: std::array::from_fn(|i| {
                std::array::from_fn(|j| alpha.clone() * self.m[i][j].clone() + beta.clone() * other.m[i][j].clone())
            }),
        }
    }

    pub fn transpose(&self) -> Self {
        Behavior {
            m: std::array::from_fn(|i| std::array::from_fn(|j| self.m[j][i].clone())),
        }
    }

    /// Checks entries in [0,1] and unit block sums; reports the first violation.
    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            for j in 0..4 {
                let v = &self.m[i][j];
                if !(T::zero().le_tol(v) && v.le_tol(&T::one())) {
                    return Err(Error::InvalidBehavior(format!(
                        "entry ({i},{j}) = {:?} outside [0,1]",
                        v
                    )));
                }
            }
        }
        for x in 0..2 {
            for y in 0..2 {
                let mut s = T::zero();
                for a in 0..2 {
                    for b in 0..2 {
                        s = s + self.get(a, b, x, y).clone();
                    }
                }
                if !s.near(&T::one()) {
                    return Err(Error::InvalidBehavior(format!("block (x={x}, y={y}) sums to {:?}", s)));
                }
            }
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn to_correlators(&self) -> Correlators<T> {
        let mut c = Correlators {
            a: std::array::from_fn(|_| T::zero()),
            b: std::array::from_fn(|_| T::zero()),
            ab: std::array::from_fn(|_| T::zero()),
        };
        for x in 0..2 {
            for y in 0..2 {
                let k = 2 * x + y;
                for a in 0..2 {
                    for b in 0..2 {
                        let v = self.get(a, b, x, y).clone();
                        c.a[k] = c.a[k].clone() + sgn::<T>(a) * v.clone();
                        c.b[k] = c.b[k].clone() + sgn::<T>(b) * v.clone();
                        c.ab[k] = c.ab[k].clone() + sgn::<T>(a + b) * v;
                    }
                }
            }
        }
        c
    }

    pub fn ns_overlap(&self, c: NsConstraint) -> T {
        self.dot(&c.matrix_as())
    }

    /// (epsAB, epsBA): largest absolute overlap with the A->B and B->A constraints.
    pub fn signaling_measures(&self) -> (T, T) {
        let m = |cs: [NsConstraint; 2]| {
            let u = self.ns_overlap(cs[0]).abs();
            let v = self.ns_overlap(cs[1]).abs();
            if u >= v {
                u
            } else {
                v
            }
        };
        (
            m([NsConstraint::AtoB(0), NsConstraint::AtoB(1)]),
            m([NsConstraint::BtoA(0), NsConstraint::BtoA(1)]),
        )
    }

    pub fn is_non_signaling(&self) -> bool {
        NsConstraint::ALL.iter().all(|c| self.ns_overlap(*c).near_zero())
    }

    /// Alice marginal p(a|x,y).
    pub fn alice_marginal(&self, a: usize, x: usize, y: usize) -> T {
        self.get(a, 0, x, y).clone() + self.get(a, 1, x, y).clone()
    }

    pub fn bob_marginal(&self, b: usize, x: usize, y: usize) -> T {
        self.get(0, b, x, y).clone() + self.get(1, b, x, y).clone()
    }
}

impl BehaviorQ {
    /// Behavior JSON: `{"p": [[..4..] x4], "exact": true}` with `"num/den"` strings.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .m
            .iter()
            .map(|r| Value::from(r.iter().map(fmt_q).collect::<Vec<_>>()))
            .collect();
        json!({ "p": rows, "exact": true })
    }
}

impl BehaviorF {
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self.m.iter().map(|r| json!(r.to_vec())).collect();
        json!({ "p": rows, "exact": false })
    }
}

/// Parsed behavior JSON; exact input stays exact.
#[derive(Clone, Debug)]
pub enum AnyBehavior {
    Exact(BehaviorQ),
    Float(BehaviorF),
}

fn json_entries(v: &Value) -> Result<Vec<Value>> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse("\"p\" must be an array".into()))?;
    let mut out = Vec::new();
    for r in rows {
        match r {
            Value::Array(inner) => out.extend(inner.iter().cloned()),
            other => out.push(other.clone()),
        }
    }
    if out.len() != 16 {
        return Err(Error::Parse(format!("\"p\" must hold 16 numbers, found {}", out.len())));
    }
    Ok(out)
}

fn value_to_q(v: &Value) -> Result<Q> {
    match v {
        Value::String(s) => parse_q(s),
        Value::Number(n) => parse_q(&n.to_string()),
        _ => Err(Error::Parse(format!("bad entry {v}"))),
    }
}

impl AnyBehavior {
    pub fn from_json(v: &Value) -> Result<Self> {
        let p = v.get("p").ok_or_else(|| Error::Parse("missing \"p\"".into()))?;
        let exact = v.get("exact").and_then(Value::as_bool).unwrap_or(true);
        let entries = json_entries(p)?;
        let dens: Option<Vec<Value>> = match v.get("den") {
            None | Some(Value::Null) => None,
            Some(Value::Array(_)) => Some(json_entries(&v["den"])?),
            Some(d) => Some(vec![d.clone(); 16]),
        };
        if exact {
            let mut vals = Vec::with_capacity(16);
            for (k, e) in entries.iter().enumerate() {
                let mut x = value_to_q(e)?;
                if let Some(d) = &dens {
                    let d = value_to_q(&d[k])?;
                    if d.is_zero() {
                        return Err(Error::Parse("zero in \"den\"".into()));
                    }
                    x /= d;
                }
                vals.push(x);
            }
            Ok(AnyBehavior::Exact(Behavior::from_flat(&vals)?))
        } else {
            let mut vals = Vec::with_capacity(16);
            for (k, e) in entries.iter().enumerate() {
                let mut x = match e {
                    Value::Number(n) => n.as_f64().unwrap_or(f64::NAN),
                    _ => value_to_q(e)?.to_f64(),
                };
                if let Some(d) = &dens {
                    x /= value_to_q(&d[k])?.to_f64();
                }
                vals.push(x);
            }
            Ok(AnyBehavior::Float(Behavior::from_flat(&vals)?))
        }
    }

    /// Exact view; float input is rounded to the nearest multiple of 1/den and
    /// renormalized blockwise so the result is an exact behavior.
    pub fn to_exact(&self, den: i64) -> BehaviorQ {
        match self {
            AnyBehavior::Exact(b) => b.clone(),
            AnyBehavior::Float(b) => exact_from_float(b, den),
        }
    }
}

/// Rounds each entry to k/den and pushes the rounding residue of every block onto
/// its largest entry, so blocks sum to one exactly.
pub fn exact_from_float(b: &BehaviorF, den: i64) -> BehaviorQ {
    let mut out = b.map(|v| crate::scalar::rationalize(*v, den));
    for x in 0..2 {
        for y in 0..2 {
            let mut s = Q::zero();
            let mut best = (0, 0);
            for a in 0..2 {
                for bb in 0..2 {
                    s += out.get(a, bb, x, y).clone();
                    if out.get(a, bb, x, y) > out.get(best.0, best.1, x, y) {
                        best = (a, bb);
                    }
                }
            }
            let fix = Q::one() - s;
            let cell = &mut out.m[idx(x, best.0)][idx(y, best.1)];
            *cell = cell.clone() + fix;
        }
    }
    out
}

impl<T: Scalar + fmt::Display> fmt::Display for Behavior<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.m.iter().enumerate() {
            if i == 2 {
                writeln!(f, "-----+-----")?;
            }
            writeln!(f, "{} {} | {} {}", r[0], r[1], r[2], r[3])?;
        }
        Ok(())
    }
}

/// <A_{x,y}>, <B_{x,y}>, <A_x B_y>, each indexed by 2x + y.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlators<T> {
    pub a: [T; 4],
    pub b: [T; 4],
    pub ab: [T; 4],
}

impl<T: Scalar> Correlators<T> {
    pub fn a(&self, x: usize, y: usize) -> &T {
        &self.a[2 * x + y]
    }
    pub fn b(&self, x: usize, y: usize) -> &T {
        &self.b[2 * x + y]
    }
    pub fn ab(&self, x: usize, y: usize) -> &T {
        &self.ab[2 * x + y]
    }

    /// Quarter-sum inverse. Fails if a reconstructed probability is negative.
    pub fn to_behavior(&self) -> Result<Behavior<T>> {
        let four = T::from_i64(4).unwrap();
        let b = Behavior::from_fn(|x, y, a, b| {
            let k = 2 * x + y;
            (T::one()
                + sgn::<T>(a) * self.a[k].clone()
                + sgn::<T>(b) * self.b[k].clone()
                + sgn::<T>(a + b) * self.ab[k].clone())
                / four.clone()
        });
        for i in 0..4 {
            for j in 0..4 {
                if !T::zero().le_tol(&b.m[i][j]) {
                    return Err(Error::InvalidBehavior(format!(
                        "correlators give negative probability at ({i},{j})"
                    )));
                }
            }
        }
        Ok(b)
    }
}

/// The four non-signaling constraint vectors.
///
/// `AtoB(y)`: p(b=0|0,y) - p(b=0|1,y). `BtoA(x)`: p(a=0|x,0) - p(a=0|x,1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NsConstraint {
    AtoB(usize),
    BtoA(usize),
}

impl NsConstraint {
    pub const ALL: [NsConstraint; 4] = [
        NsConstraint::AtoB(0),
        NsConstraint::AtoB(1),
        NsConstraint::BtoA(0),
        NsConstraint::BtoA(1),
    ];

    pub fn matrix(&self) -> [[i64; 4]; 4] {
        let mut m = [[0i64; 4]; 4];
        match *self {
            NsConstraint::AtoB(y) => {
                let c = 2 * y;
                m[0][c] = 1;
                m[1][c] = 1;
                m[2][c] = -1;
                m[3][c] = -1;
            }
            NsConstraint::BtoA(x) => {
                let r = 2 * x;
                m[r] = [1, 1, -1, -1];
            }
        }
        m
    }

    pub fn matrix_as<T: Scalar>(&self) -> [[T; 4]; 4] {
        let m = self.matrix();
        std::array::from_fn(|i| std::array::from_fn(|j| T::from_i64(m[i][j]).unwrap()))
    }

    pub fn label(&self) -> String {
        match self {
            NsConstraint::AtoB(y) => format!("A->B,y={y}"),
            NsConstraint::BtoA(x) => format!("B->A,x={x}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    #[test]
    fn json_round_trip() {
        let b = BehaviorQ::pr_box();
        let v = b.to_json();
        match AnyBehavior::from_json(&v).unwrap() {
            AnyBehavior::Exact(c) => assert_eq!(b, c),
            _ => panic!("exact expected"),
        }
        let den = json!({"p": [[1,0,0,1],[0,1,1,0],[1,0,0,1],[0,1,1,0]], "exact": true, "den": 2});
        match AnyBehavior::from_json(&den).unwrap() {
            AnyBehavior::Exact(c) => assert_eq!(c.m[0][0], q(1, 2)),
            _ => panic!(),
        }
    }

    #[test]
    fn float_rounding_keeps_blocks_normalized() {
        let b = BehaviorF::from_fn(|_, _, a, b| if a == b { 0.4999999 } else { 0.0000001 });
        let e = exact_from_float(&b, 1_000_000);
        assert!(e.is_valid());
    }
}
