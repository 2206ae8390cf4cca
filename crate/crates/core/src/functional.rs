//! Bell functionals: symbolic coefficient matrices in (p, r) with a bound.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::behavior::{Behavior, BehaviorF};
use crate::error::{Error, Result};
use crate::geometry::Sense;
use crate::poly::{Poly, RationalFunction};
use crate::scalar::{fmt_q, q, qi, Scalar, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    B1,
    B2,
    B3,
    B4,
    Tp,
    Wpr,
    Chsh,
}

impl Family {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "B1" => Family::B1,
            "B2" => Family::B2,
            "B3" => Family::B3,
            "B4" => Family::B4,
            "T" | "Tp" => Family::Tp,
            "W" | "Wpr" => Family::Wpr,
            "CHSH" | "chsh" => Family::Chsh,
            _ => return Err(Error::UnknownId(s.to_string())),
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::B1 => "B1",
            Family::B2 => "B2",
            Family::B3 => "B3",
            Family::B4 => "B4",
            Family::Tp => "Tp",
            Family::Wpr => "Wpr",
            Family::Chsh => "CHSH",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BellFunctional {
    pub id: String,
    pub family: Family,
    pub label: String,
    pub coeffs: [[RationalFunction; 4]; 4],
    pub bound: RationalFunction,
    pub sense: Sense,
    pub class_size: Option<u32>,
    /// `s` or `v` marker from the printed list.
    pub tag: Option<String>,
}

/// A functional at concrete parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional {
    pub id: String,
    pub coeffs: [[Q; 4]; 4],
    pub bound: Q,
    pub sense: Sense,
}

impl BellFunctional {
    pub fn instantiate(&self, p: &Q, r: &Q) -> Result<Functional> {
        let x = [p.clone(), Q::zero(), r.clone(), Q::zero()];
        let mut coeffs: [[Q; 4]; 4] = Default::default();
        for i in 0..4 {
            for j in 0..4 {
                coeffs[i][j] = self.coeffs[i][j]
                    .eval(&x)
                    .map_err(|e| Error::Domain(format!("{} at p={}, r={}: {e}", self.id, fmt_q(p), fmt_q(r))))?;
            }
        }
        Ok(Functional {
            id: self.id.clone(),
            coeffs,
            bound: self.bound.eval(&x)?,
            sense: self.sense,
        })
    }

    pub fn coeffs_f64(&self, p: f64, r: f64) -> [[f64; 4]; 4] {
        let x = [p, 0.0, r, 0.0];
        std::array::from_fn(|i| std::array::from_fn(|j| self.coeffs[i][j].eval_f64(&x)))
    }

    pub fn is_positivity(&self) -> bool {
        self.sense == Sense::Ge
    }
}

impl Functional {
    pub fn evaluate<T: Scalar>(&self, b: &Behavior<T>) -> T {
        let c: [[T; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| T::from_q(&self.coeffs[i][j])));
        b.dot(&c)
    }

    pub fn evaluate_f64(&self, b: &BehaviorF) -> f64 {
        self.evaluate(b)
    }

    /// Amount by which `b` violates the inequality (positive = violation).
    pub fn violation<T: Scalar>(&self, b: &Behavior<T>) -> T {
        let v = self.evaluate(b);
        let bound = T::from_q(&self.bound);
        match self.sense {
            Sense::Le => v - bound,
            Sense::Ge => bound - v,
        }
    }

    pub fn coeffs_f64(&self) -> [[f64; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.coeffs[i][j].to_f64()))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "coeffs": self.coeffs.iter().map(|r| r.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "bound": fmt_q(&self.bound),
            "sense": match self.sense { Sense::Le => "<=", Sense::Ge => ">=" },
        })
    }

    pub fn to_latex(&self) -> String {
        let mut s = String::from("\\left(\\begin{array}{cc|cc}\n");
        for (i, r) in self.coeffs.iter().enumerate() {
            let cells: Vec<String> = r.iter().map(latex_q).collect();
            s.push_str(&format!(" {} \\\\", cells.join(" & ")));
            if i == 1 {
                s.push_str(" \\hline");
            }
            s.push('\n');
        }
        let rel = match self.sense {
            Sense::Le => "\\leq",
            Sense::Ge => "\\geq",
        };
        s.push_str(&format!("\\end{{array}}\\right) {rel} {}", latex_q(&self.bound)));
        s
    }
}

fn latex_q(v: &Q) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        let sign = if v.is_negative() { "-" } else { "" };
        format!("{sign}\\frac{{{}}}{{{}}}", v.numer().abs(), v.denom())
    }
}

fn sgn(k: usize) -> i64 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Coefficient matrix of sum_xy alpha_xy <A_xy> + beta_xy <B_xy> + gamma_xy <A_x B_y>,
/// with every array indexed by 2x + y.
pub fn from_correlator_coeffs(
    alpha: &[RationalFunction; 4],
    beta: &[RationalFunction; 4],
    gamma: &[RationalFunction; 4],
) -> [[RationalFunction; 4]; 4] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let (x, a, y, b) = (i / 2, i % 2, j / 2, j % 2);
            let k = 2 * x + y;
            let c = |s: i64| RationalFunction::constant(s);
            alpha[k]
                .mul(&c(sgn(a)))
                .add(&beta[k].mul(&c(sgn(b))))
                .add(&gamma[k].mul(&c(sgn(a + b))))
        })
    })
}

fn rf_q(v: &Q) -> RationalFunction {
    RationalFunction::new(Poly::constant(v.numer().clone()), Poly::constant(v.denom().clone()))
        .expect("nonzero denominator")
}

fn zeros() -> [RationalFunction; 4] {
    std::array::from_fn(|_| RationalFunction::constant(0))
}

/// <A0B0> + <A0B1> + <A1B0> - <A1B1> <= 2.
pub fn chsh() -> BellFunctional {
    let c = |v| RationalFunction::constant(v);
    BellFunctional {
        id: "CHSH".into(),
        family: Family::Chsh,
        label: "CHSH".into(),
        coeffs: from_correlator_coeffs(&zeros(), &zeros(), &[c(1), c(1), c(1), c(-1)]),
        bound: c(2),
        sense: Sense::Le,
        class_size: None,
        tag: None,
    }
}

fn check_t_domain(p: &Q) -> Result<()> {
    if p <= &q(2, 5) || p >= &Q::one() {
        return Err(Error::Domain(format!("T_p needs p in (2/5, 1), got {}", fmt_q(p))));
    }
    Ok(())
}

/// T_p = <B01 - B00> + c<B10 - B11> + <A0(B0 + B1)> + c<A1(B0 - B1)>, c = (1-p)/p,
/// where B_xy is Bob's correlator at inputs (x, y). Bound: the signaling-local maximum.
pub fn t_functional(p: &Q) -> Result<BellFunctional> {
    check_t_domain(p)?;
    let one = RationalFunction::constant(1);
    let cp = RationalFunction::parse("(1-p)/p").unwrap();
    let beta = [one.neg(), one.clone(), cp.clone(), cp.neg()];
    let gamma = [one.clone(), one.clone(), cp.clone(), cp.neg()];
    Ok(BellFunctional {
        id: format!("T[{}]", fmt_q(p)),
        family: Family::Tp,
        label: "T_p".into(),
        coeffs: from_correlator_coeffs(&zeros(), &beta, &gamma),
        bound: rf_q(&t_signaling_bound(p)),
        sense: Sense::Le,
        class_size: None,
        tag: None,
    })
}

/// 2(|2p-1| + 1 - p)/p.
pub fn t_local_bound(p: &Q) -> Q {
    (qi(2) * ((qi(2) * p - qi(1)).abs() + qi(1) - p)) / p
}

/// 2 max{p, |-p + 2(1-p)^2/p|} + 2(1-p).
pub fn t_signaling_bound(p: &Q) -> Q {
    let one = Q::one();
    let u = (-p.clone() + qi(2) * (&one - p) * (&one - p) / p).abs();
    let m = if &u > p { u } else { p.clone() };
    qi(2) * m + qi(2) * (one - p)
}

/// 2 sqrt(2) sqrt(p/(3p-1)).
pub fn t_quantum_bound(p: f64) -> f64 {
    2.0 * 2f64.sqrt() * (p / (3.0 * p - 1.0)).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TBounds {
    pub local: Q,
    pub signaling: Q,
    pub quantum: f64,
}

pub fn t_bounds(p: &Q) -> Result<TBounds> {
    check_t_domain(p)?;
    Ok(TBounds {
        local: t_local_bound(p),
        signaling: t_signaling_bound(p),
        quantum: t_quantum_bound(p.to_f64()),
    })
}

/// W_{p,r} = <G_{p,r}, P> <= 1.
pub fn w_functional() -> BellFunctional {
    let e = |s: &str| RationalFunction::parse(s).unwrap();
    let z = || e("0");
    BellFunctional {
        id: "W".into(),
        family: Family::Wpr,
        label: "W_{p,r}".into(),
        coeffs: [
            [e("1"), e("1"), z(), e("r-1")],
            [e("1"), z(), z(), z()],
            [z(), z(), z(), z()],
            [e("p-1"), z(), z(), e("(1-p)(1-r)")],
        ],
        bound: e("1"),
        sense: Sense::Le,
        class_size: None,
        tag: None,
    }
}

pub fn w_domain(p: &Q, r: &Q) -> Result<()> {
    for v in [p, r] {
        if v < &Q::zero() || v >= &Q::one() {
            return Err(Error::Domain(format!("W needs p, r in [0,1), got {}", fmt_q(v))));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::BehaviorQ;

    #[test]
    fn chsh_on_pr_box() {
        let f = chsh().instantiate(&qi(0), &qi(0)).unwrap();
        assert_eq!(f.evaluate(&BehaviorQ::pr_box()), qi(4));
        assert_eq!(f.evaluate(&BehaviorQ::uniform()), qi(0));
    }

    #[test]
    fn t_bound_examples() {
        assert_eq!(t_local_bound(&q(1, 2)), qi(2));
        assert_eq!(t_local_bound(&q(9, 20)), q(26, 9));
        assert_eq!(t_signaling_bound(&q(3, 4)), qi(2));
        assert!(t_functional(&q(2, 5)).is_err());
        assert!(t_functional(&qi(1)).is_err());
        assert!((t_bounds(&q(1, 2)).unwrap().quantum - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn latex_shape() {
        let f = w_functional().instantiate(&q(1, 2), &q(1, 3)).unwrap();
        let s = f.to_latex();
        assert!(s.contains("\\hline") && s.contains("-\\frac{2}{3}"));
    }
}
