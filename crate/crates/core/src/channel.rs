//! Noisy input channels and the vertex sets of the signaling local polytopes.

use num_traits::{One, Zero};

use crate::behavior::{Behavior, BehaviorQ};
use crate::error::{Error, Result};
use crate::scalar::{fmt_q, parse_q, q, Q};

/// Channel fidelities: p = Pr[x~=0|x=0], q = Pr[x~=1|x=1], r = Pr[y~=0|y=0], s = Pr[y~=1|y=1].
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelParams {
    pub p: Q,
    pub q: Q,
    pub r: Q,
    pub s: Q,
}

impl ChannelParams {
    pub fn new(p: Q, q: Q, r: Q, s: Q) -> Result<Self> {
        let c = ChannelParams { p, q, r, s };
        for v in [&c.p, &c.q, &c.r, &c.s] {
            if v < &Q::zero() || v > &Q::one() {
                return Err(Error::Domain(format!("fidelity {} outside [0,1]", fmt_q(v))));
            }
        }
        Ok(c)
    }

    /// (p, q), (r, s) with each symbol's fidelity as given.
    pub fn of(p: &Q, qq: &Q, r: &Q, s: &Q) -> Self {
        Self::new(p.clone(), qq.clone(), r.clone(), s.clone()).expect("fidelities in [0,1]")
    }

    /// Pr[x~ = t | x].
    pub fn cx(&self, t: usize, x: usize) -> Q {
        crossover(&self.p, &self.q, t, x)
    }

    pub fn cy(&self, t: usize, y: usize) -> Q {
        crossover(&self.r, &self.s, t, y)
    }

    pub fn is_party_symmetric(&self) -> bool {
        self.p == self.r && self.q == self.s
    }

    pub fn label(&self) -> String {
        format!(
            "S[({},{}),({},{})]",
            fmt_q(&self.p),
            fmt_q(&self.q),
            fmt_q(&self.r),
            fmt_q(&self.s)
        )
    }
}

fn crossover(f0: &Q, f1: &Q, t: usize, input: usize) -> Q {
    match (input, t) {
        (0, 0) => f0.clone(),
        (0, _) => Q::one() - f0,
        (_, 1) => f1.clone(),
        _ => Q::one() - f1,
    }
}

/// Bit `2x + y~` of `ka` is f_A(x, y~); bit `2x~ + y` of `kb` is f_B(x~, y).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ResponsePair {
    pub ka: u8,
    pub kb: u8,
}

impl ResponsePair {
    pub fn new(ka: u8, kb: u8) -> Result<Self> {
        if ka > 15 || kb > 15 {
            return Err(Error::Domain(format!("response index out of range: ({ka},{kb})")));
        }
        Ok(ResponsePair { ka, kb })
    }

    pub fn from_fns(fa: impl Fn(usize, usize) -> usize, fb: impl Fn(usize, usize) -> usize) -> Self {
        let mut ka = 0u8;
        let mut kb = 0u8;
        for i in 0..4 {
            ka |= ((fa(i / 2, i % 2) & 1) as u8) << i;
            kb |= ((fb(i / 2, i % 2) & 1) as u8) << i;
        }
        ResponsePair { ka, kb }
    }

    pub fn fa(&self, x: usize, yt: usize) -> usize {
        (self.ka >> (2 * x + yt) & 1) as usize
    }

    pub fn fb(&self, xt: usize, y: usize) -> usize {
        (self.kb >> (2 * xt + y) & 1) as usize
    }
}

pub fn deterministic_vertex(c: &ChannelParams, rp: ResponsePair) -> BehaviorQ {
    Behavior::from_fn(|x, y, a, b| {
        let mut pa = Q::zero();
        let mut pb = Q::zero();
        for t in 0..2 {
            if rp.fa(x, t) == a {
                pa += c.cy(t, y);
            }
            if rp.fb(t, y) == b {
                pb += c.cx(t, x);
            }
        }
        pa * pb
    })
}

#[derive(Clone, Debug)]
pub struct Vertex {
    pub behavior: BehaviorQ,
    /// Generating channel params index within the model and response pair.
    pub source: (usize, ResponsePair),
}

#[derive(Clone, Debug)]
pub struct PolytopeModel {
    pub label: String,
    pub params: Vec<ChannelParams>,
    pub vertices: Vec<Vertex>,
}

impl PolytopeModel {
    pub fn behaviors(&self) -> Vec<BehaviorQ> {
        self.vertices.iter().map(|v| v.behavior.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn push_unique(&mut self, v: Vertex) {
        if !self.vertices.iter().any(|w| w.behavior == v.behavior) {
            self.vertices.push(v);
        }
    }

    fn union(label: String, params: Vec<ChannelParams>) -> Self {
        let mut m = PolytopeModel {
            label,
            params: params.clone(),
            vertices: Vec::new(),
        };
        for (i, c) in params.iter().enumerate() {
            for ka in 0..16u8 {
                for kb in 0..16u8 {
                    let rp = ResponsePair { ka, kb };
                    m.push_unique(Vertex {
                        behavior: deterministic_vertex(c, rp),
                        source: (i, rp),
                    });
                }
            }
        }
        m
    }
}

/// All 256 response-pair behaviors, deduplicated.
pub fn enumerate_vertices(c: &ChannelParams) -> PolytopeModel {
    PolytopeModel::union(c.label(), vec![c.clone()])
}

#[derive(Clone, Debug, PartialEq)]
pub enum PolytopeSpec {
    Plain(ChannelParams),
    /// hull of S_{(p,p),(1/2,1/2)} and S_{(1/2,1/2),(p,p)}.
    OneWay(Q),
    /// union of the four (p,1)/(1,p) by (r,1)/(1,r) models.
    Star(Q, Q),
}

pub fn named_polytope(spec: &PolytopeSpec) -> PolytopeModel {
    let half = q(1, 2);
    let one = Q::one();
    match spec {
        PolytopeSpec::Plain(c) => enumerate_vertices(c),
        PolytopeSpec::OneWay(p) => PolytopeModel::union(
            format!("S1W[{}]", fmt_q(p)),
            vec![
                ChannelParams::of(p, p, &half, &half),
                ChannelParams::of(&half, &half, p, p),
            ],
        ),
        PolytopeSpec::Star(p, r) => PolytopeModel::union(
            format!("Sstar[{},{}]", fmt_q(p), fmt_q(r)),
            vec![
                ChannelParams::of(p, &one, r, &one),
                ChannelParams::of(p, &one, &one, r),
                ChannelParams::of(&one, p, r, &one),
                ChannelParams::of(&one, p, &one, r),
            ],
        ),
    }
}

impl PolytopeSpec {
    /// Accepts `S[(p,q),(r,s)]`, `oneway(p)`, `star(p,r)`; whitespace ignored.
    pub fn parse(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Spec(format!("unrecognized polytope spec {s:?}"));
        let nums = |body: &str| -> Result<Vec<Q>> {
            body.split(',')
                .map(|x| x.trim_matches(|c| c == '(' || c == ')'))
                .filter(|x| !x.is_empty())
                .map(parse_q)
                .collect()
        };
        if let Some(body) = t.strip_prefix("S[").and_then(|b| b.strip_suffix(']')) {
            let v = nums(body)?;
            if v.len() != 4 {
                return Err(bad());
            }
            return Ok(PolytopeSpec::Plain(ChannelParams::new(
                v[0].clone(),
                v[1].clone(),
                v[2].clone(),
                v[3].clone(),
            )?));
        }
        if let Some(body) = t.strip_prefix("oneway(").and_then(|b| b.strip_suffix(')')) {
            let v = nums(body)?;
            if v.len() != 1 {
                return Err(bad());
            }
            return Ok(PolytopeSpec::OneWay(v[0].clone()));
        }
        if let Some(body) = t.strip_prefix("star(").and_then(|b| b.strip_suffix(')')) {
            let v = nums(body)?;
            return match v.len() {
                1 => Ok(PolytopeSpec::Star(v[0].clone(), v[0].clone())),
                2 => Ok(PolytopeSpec::Star(v[0].clone(), v[1].clone())),
                _ => Err(bad()),
            };
        }
        Err(bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing() {
        assert!(matches!(
            PolytopeSpec::parse("S[(1/2,1/2),(1/2,1/2)]"),
            Ok(PolytopeSpec::Plain(_))
        ));
        assert_eq!(
            PolytopeSpec::parse("oneway(3/4)").unwrap(),
            PolytopeSpec::OneWay(q(3, 4))
        );
        assert_eq!(
            PolytopeSpec::parse("star(1/5, 2/5)").unwrap(),
            PolytopeSpec::Star(q(1, 5), q(2, 5))
        );
        assert!(PolytopeSpec::parse("S[(2,1),(1,1)]").is_err());
        assert!(PolytopeSpec::parse("cube").is_err());
    }

    #[test]
    fn response_bits() {
        let rp = ResponsePair::from_fns(|x, _| x, |xt, y| xt ^ y);
        assert_eq!(rp.fa(1, 0), 1);
        assert_eq!(rp.fb(1, 1), 0);
        assert!(ResponsePair::new(16, 0).is_err());
    }
}
