//! Integer polynomials in (p, q, r, s), rational functions, and an expression parser.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::Q;

pub const VARS: [char; 4] = ['p', 'q', 'r', 's'];

type Exp = [u32; 4];

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Exp, BigInt>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: BigInt) -> Self {
        let mut t = BTreeMap::new();
        if !c.is_zero() {
            t.insert([0; 4], c);
        }
        Poly { terms: t }
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    pub fn var(k: usize) -> Self {
        let mut e = [0; 4];
        e[k] = 1;
        Poly {
            terms: BTreeMap::from([(e, BigInt::one())]),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut t = self.terms.clone();
        for (e, c) in &o.terms {
            let v = t.entry(*e).or_insert_with(BigInt::zero);
            *v += c;
            if v.is_zero() {
                t.remove(e);
            }
        }
        Poly { terms: t }
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut t: BTreeMap<Exp, BigInt> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3]];
                *t.entry(e).or_insert_with(BigInt::zero) += c1 * c2;
            }
        }
        t.retain(|_, c| !c.is_zero());
        Poly { terms: t }
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::one(), |acc, _| acc.mul(self))
    }

    /// Evaluates at (p, q, r, s).
    pub fn eval(&self, x: &[Q; 4]) -> Q {
        let mut s = Q::zero();
        for (e, c) in &self.terms {
            let mut t = Q::from_integer(c.clone());
            for k in 0..4 {
                for _ in 0..e[k] {
                    t *= &x[k];
                }
            }
            s += t;
        }
        s
    }

    pub fn eval_f64(&self, x: &[f64; 4]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let cf: f64 = c.to_string().parse().unwrap_or(f64::NAN);
                (0..4).fold(cf, |acc, k| acc * x[k].powi(e[k] as i32))
            })
            .sum()
    }

    fn content(&self) -> BigInt {
        self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    fn min_exponents(&self) -> Exp {
        let mut m = [u32::MAX; 4];
        for e in self.terms.keys() {
            for k in 0..4 {
                m[k] = m[k].min(e[k]);
            }
        }
        if self.terms.is_empty() {
            [0; 4]
        } else {
            m
        }
    }

    fn scale_down(&self, c: &BigInt, e: &Exp) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(x, v)| ([x[0] - e[0], x[1] - e[1], x[2] - e[2], x[3] - e[3]], v / c))
                .collect(),
        }
    }

    fn leading_sign_negative(&self) -> bool {
        self.terms.iter().next_back().is_some_and(|(_, c)| c.is_negative())
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Stable byte encoding of the terms, for checksums.
    pub fn canonical_string(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let mut mono = String::new();
            for k in 0..4 {
                match e[k] {
                    0 => {}
                    1 => mono.push_str(&format!(" {}", VARS[k])),
                    n => mono.push_str(&format!(" {}^{}", VARS[k], n)),
                }
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let mag = c.abs();
            let coef = if mag.is_one() && !mono.is_empty() {
                String::new()
            } else {
                mag.to_string()
            };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            write!(f, "{}{}", coef, if coef.is_empty() { mono.trim_start() } else { &mono })?;
            first = false;
        }
        Ok(())
    }
}

/// num / den with den not identically zero.
#[derive(Clone, Debug)]
pub struct RationalFunction {
    pub num: Poly,
    pub den: Poly,
}

impl PartialEq for RationalFunction {
    fn eq(&self, o: &Self) -> bool {
        self.num.mul(&o.den) == o.num.mul(&self.den)
    }
}

impl Default for RationalFunction {
    fn default() -> Self {
        Self::constant(0)
    }
}

impl RationalFunction {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Parse("denominator is identically zero".into()));
        }
        Ok(RationalFunction { num, den }.reduced())
    }

    pub fn from_poly(p: Poly) -> Self {
        RationalFunction {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: i64) -> Self {
        Self::from_poly(Poly::constant(c.into()))
    }

    /// Cancels the common integer content and monomial factor; leading
    /// denominator coefficient made positive.
    pub fn reduced(&self) -> Self {
        if self.num.is_zero() {
            return RationalFunction {
                num: Poly::zero(),
                den: Poly::one(),
            };
        }
        let g = self.num.content().gcd(&self.den.content());
        let en = self.num.min_exponents();
        let ed = self.den.min_exponents();
        let e = [en[0].min(ed[0]), en[1].min(ed[1]), en[2].min(ed[2]), en[3].min(ed[3])];
        let mut n = self.num.scale_down(&g, &e);
        let mut d = self.den.scale_down(&g, &e);
        if d.leading_sign_negative() {
            n = n.neg();
            d = d.neg();
        }
        RationalFunction { num: n, den: d }
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.den == o.den {
            return RationalFunction {
                num: self.num.add(&o.num),
                den: self.den.clone(),
            }
            .reduced();
        }
        RationalFunction {
            num: self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            den: self.den.mul(&o.den),
        }
        .reduced()
    }

    pub fn neg(&self) -> Self {
        RationalFunction {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        RationalFunction {
            num: self.num.mul(&o.num),
            den: self.den.mul(&o.den),
        }
        .reduced()
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        if o.num.is_zero() {
            return Err(Error::Parse("division by an identically zero expression".into()));
        }
        Ok(RationalFunction {
            num: self.num.mul(&o.den),
            den: self.den.mul(&o.num),
        }
        .reduced())
    }

    pub fn pow(&self, n: u32) -> Self {
        RationalFunction {
            num: self.num.pow(n),
            den: self.den.pow(n),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Exact value; `Error::Domain` where the denominator vanishes.
    pub fn eval(&self, x: &[Q; 4]) -> Result<Q> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(Error::Domain(format!("denominator {} vanishes", self.den)));
        }
        Ok(self.num.eval(x) / d)
    }

    pub fn eval_f64(&self, x: &[f64; 4]) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let toks = tokenize(s)?;
        let mut p = Parser { toks, pos: 0, src: s };
        let v = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(p.err("trailing input"));
        }
        Ok(v)
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == Poly::one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Var(usize),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let n: String = cs[st..i].iter().collect();
            out.push(Tok::Num(n.parse().unwrap()));
        } else if let Some(k) = VARS.iter().position(|&v| v == c) {
            out.push(Tok::Var(k));
            i += 1;
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?} in {s:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    src: &'a str,
}

// expr   := term (('+'|'-') term)*
// term   := unary (('*'|'/') unary | power)*      juxtaposition multiplies
// unary  := ('-'|'+') unary | power
// power  := atom ('^' integer)?
impl Parser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at token {} in {:?}", self.pos, self.src))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn expr(&mut self) -> Result<RationalFunction> {
        let mut v = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let w = self.term()?;
            v = if c == '+' { v.add(&w) } else { v.sub(&w) };
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<RationalFunction> {
        let mut v = self.unary()?;
        loop {
            match self.peek().cloned() {
                Some(Tok::Op('*')) => {
                    self.pos += 1;
                    v = v.mul(&self.unary()?);
                }
                Some(Tok::Op('/')) => {
                    self.pos += 1;
                    let w = self.unary()?;
                    v = v.div(&w).map_err(|_| self.err("division by zero"))?;
                }
                Some(Tok::Op('(')) | Some(Tok::Var(_)) | Some(Tok::Num(_)) => {
                    v = v.mul(&self.power()?);
                }
                _ => return Ok(v),
            }
        }
    }

    fn unary(&mut self) -> Result<RationalFunction> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RationalFunction> {
        let b = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    self.pos += 1;
                    let e: u32 = n.try_into().map_err(|_| self.err("exponent too large"))?;
                    return Ok(b.pow(e));
                }
                _ => return Err(self.err("expected integer exponent")),
            }
        }
        Ok(b)
    }

    fn atom(&mut self) -> Result<RationalFunction> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(RationalFunction::from_poly(Poly::constant(n)))
            }
            Some(Tok::Var(k)) => {
                self.pos += 1;
                Ok(RationalFunction::from_poly(Poly::var(k)))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(&Tok::Op(')')) {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected a number, variable or '('")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    fn at(p: Q, r: Q) -> [Q; 4] {
        [p, qi(0), r, qi(0)]
    }

    #[test]
    fn juxtaposition_and_precedence() {
        let f = RationalFunction::parse("-3 p^2 r + 2 p (r-1)").unwrap();
        // p = 2, r = 3: -36 + 8 = -28
        assert_eq!(f.eval(&at(qi(2), qi(3))).unwrap(), qi(-28));
        let g = RationalFunction::parse("-(((p-1)^2 p)/(4 p^3-4 p^2+3 p-1))").unwrap();
        // p = 3/4: (1/16)(3/4) / (27/16 - 9/4 + 9/4 - 1) = (3/64)/(11/16) = 3/44 -> negated
        assert_eq!(g.eval(&at(q(3, 4), qi(0))).unwrap(), q(-3, 44));
        let h = RationalFunction::parse("p (-r)+p+r-1").unwrap();
        assert_eq!(h, RationalFunction::parse("-(p-1)(r-1)").unwrap());
    }

    #[test]
    fn domain_errors() {
        let f = RationalFunction::parse("1/(2 p - 1)").unwrap();
        assert!(matches!(f.eval(&at(q(1, 2), qi(0))), Err(Error::Domain(_))));
        assert!(RationalFunction::parse("1/(p-p)").is_err());
        assert!(RationalFunction::parse("p^").is_err());
        assert!(RationalFunction::parse("(p").is_err());
        assert!(RationalFunction::parse("x").is_err());
    }

    #[test]
    fn reduction_keeps_value() {
        let f = RationalFunction::parse("(2 p^2 r)/(4 p r)").unwrap();
        assert_eq!(f.to_string(), "(p)/(2)");
    }
}
