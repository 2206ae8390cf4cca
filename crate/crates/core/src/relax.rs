//! Parameter- and measurement-dependent local models and their translation
//! into channel polytopes.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::behavior::{Behavior, BehaviorQ};
use crate::channel::{named_polytope, ChannelParams, PolytopeSpec};
use crate::error::{Error, Result};
use crate::geometry::{membership, verify_membership};
use crate::scalar::{fmt_q, q, qi, Q};

/// Marginal table indexed `[x][y][out]`.
pub type Table = [[[Q; 2]; 2]; 2];

fn table(f: impl Fn(usize, usize, usize) -> Q) -> Table {
    std::array::from_fn(|x| std::array::from_fn(|y| std::array::from_fn(|o| f(x, y, o))))
}

fn check_table(t: &Table, who: &str) -> Result<()> {
    for x in 0..2 {
        for y in 0..2 {
            let [u, v] = &t[x][y];
            if u.is_negative() || v.is_negative() || !(u + v).is_one() {
                return Err(Error::InvalidBehavior(format!(
                    "{who} table at x={x}, y={y} is not a distribution"
                )));
            }
        }
    }
    Ok(())
}

fn product(pa: &Table, pb: &Table) -> BehaviorQ {
    Behavior::from_fn(|x, y, a, b| &pa[x][y][a] * &pb[x][y][b])
}

/// Product behavior p_A(a|x,y) p_B(b|x,y) with cross-input dependence at most `epsilon`.
#[derive(Clone, Debug, PartialEq)]
pub struct PdExtremal {
    pub pa: Table,
    pub pb: Table,
    pub epsilon: Q,
}

impl PdExtremal {
    pub fn new(pa: Table, pb: Table, epsilon: Q) -> Result<Self> {
        check_table(&pa, "Alice")?;
        check_table(&pb, "Bob")?;
        let e = PdExtremal { pa, pb, epsilon };
        let (da, db) = e.dependence();
        if da > e.epsilon || db > e.epsilon {
            return Err(Error::Precondition(format!(
                "marginal dependence ({}, {}) exceeds epsilon {}",
                fmt_q(&da),
                fmt_q(&db),
                fmt_q(&e.epsilon)
            )));
        }
        Ok(e)
    }

    /// (max_x |p_A(0|x,0) - p_A(0|x,1)|, max_y |p_B(0|0,y) - p_B(0|1,y)|).
    pub fn dependence(&self) -> (Q, Q) {
        let mut da = Q::zero();
        let mut db = Q::zero();
        for k in 0..2 {
            da = da.max((&self.pa[k][0][0] - &self.pa[k][1][0]).abs());
            db = db.max((&self.pb[0][k][0] - &self.pb[1][k][0]).abs());
        }
        (da, db)
    }

    pub fn behavior(&self) -> BehaviorQ {
        product(&self.pa, &self.pb)
    }
}

/// Which input symbol a channel transmits perfectly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Fidelities (p, 1): symbol 1 is always received correctly.
    PerfectOne,
    /// Fidelities (1, p).
    PerfectZero,
}

impl Variant {
    fn fidelities(self, p: &Q) -> (Q, Q) {
        match self {
            Variant::PerfectOne => (p.clone(), Q::one()),
            Variant::PerfectZero => (Q::one(), p.clone()),
        }
    }
}

/// Response tables for a channel model: Alice `[x][y~][a]`, Bob `[x~][y][b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelResponses {
    pub p: Q,
    /// Channel carrying y to Alice.
    pub alice: Variant,
    /// Channel carrying x to Bob.
    pub bob: Variant,
    pub pa: Table,
    pub pb: Table,
}

impl ChannelResponses {
    pub fn params(&self) -> ChannelParams {
        let (p, q) = self.bob.fidelities(&self.p);
        let (r, s) = self.alice.fidelities(&self.p);
        ChannelParams::of(&p, &q, &r, &s)
    }

    /// 1: both (p,1); 2: both (1,p); 3: Alice (p,1), Bob (1,p); 4: Alice (1,p), Bob (p,1).
    pub fn case(&self) -> u8 {
        match (self.alice, self.bob) {
            (Variant::PerfectOne, Variant::PerfectOne) => 1,
            (Variant::PerfectZero, Variant::PerfectZero) => 2,
            (Variant::PerfectOne, Variant::PerfectZero) => 3,
            (Variant::PerfectZero, Variant::PerfectOne) => 4,
        }
    }

    /// Marginals seen after the channels.
    pub fn marginals(&self) -> (Table, Table) {
        let c = self.params();
        let pa = table(|x, y, a| (0..2).map(|t| c.cy(t, y) * &self.pa[x][t][a]).sum());
        let pb = table(|x, y, b| (0..2).map(|t| c.cx(t, x) * &self.pb[t][y][b]).sum());
        (pa, pb)
    }

    pub fn behavior(&self) -> BehaviorQ {
        let (pa, pb) = self.marginals();
        product(&pa, &pb)
    }
}

/// Inverts `m0 = p r0 + (1-p) r1, m1 = r1` (PerfectOne) or `m0 = r0, m1 = p r1 + (1-p) r0`.
fn invert(m: [&Q; 2], p: &Q, v: Variant) -> [Q; 2] {
    let one = Q::one();
    match v {
        Variant::PerfectOne => [(m[0] - (&one - p) * m[1]) / p, m[1].clone()],
        Variant::PerfectZero => [m[0].clone(), (m[1] - (&one - p) * m[0]) / p],
    }
}

fn in_unit(v: &Q) -> bool {
    !v.is_negative() && v <= &Q::one()
}

/// Alice side: `get(k, s, o)` is the marginal for own input k, remote input s, output o.
fn invert_party(get: impl Fn(usize, usize, usize) -> Q, p: &Q) -> Option<(Variant, Table)> {
    'variant: for v in [Variant::PerfectOne, Variant::PerfectZero] {
        let mut t: Table = Default::default();
        for k in 0..2 {
            for o in 0..2 {
                let (m0, m1) = (get(k, 0, o), get(k, 1, o));
                let r = invert([&m0, &m1], p, v);
                if !r.iter().all(in_unit) {
                    continue 'variant;
                }
                t[k][0][o] = r[0].clone();
                t[k][1][o] = r[1].clone();
            }
        }
        return Some((v, t));
    }
    None
}

/// Writes a parameter-dependent extremal as the output of one of the four
/// (p,1)/(1,p) channel models, with p = epsilon.
pub fn pd_to_channel(e: &PdExtremal) -> Result<ChannelResponses> {
    let p = &e.epsilon;
    if p.is_zero() {
        let (da, db) = e.dependence();
        if !da.is_zero() || !db.is_zero() {
            return Err(Error::Precondition("epsilon = 0 with signaling marginals".into()));
        }
    }
    if p.is_zero() || p > &Q::one() {
        return Err(Error::Domain(format!("epsilon {} outside (0,1]", fmt_q(p))));
    }
    let (alice, pa) = invert_party(|x, y, a| e.pa[x][y][a].clone(), p)
        .ok_or_else(|| Error::Precondition("Alice marginals fit neither (p,1) nor (1,p) for both inputs".into()))?;
    // Bob's tables come back as [y][x~][b]; transpose into [x~][y][b].
    let (bob, pbt) = invert_party(|y, x, b| e.pb[x][y][b].clone(), p)
        .ok_or_else(|| Error::Precondition("Bob marginals fit neither (p,1) nor (1,p) for both inputs".into()))?;
    let pb = table(|xt, y, b| pbt[y][xt][b].clone());
    Ok(ChannelResponses {
        p: p.clone(),
        alice,
        bob,
        pa,
        pb,
    })
}

/// Vertices of the band |u - v| <= eps in the unit square, as
/// (marginal at remote input 0, at remote input 1).
fn band_vertices(eps: &Q) -> Vec<[Q; 2]> {
    let one = Q::one();
    let z = Q::zero();
    let mut v = vec![[z.clone(), z.clone()], [one.clone(), one.clone()]];
    if !eps.is_zero() {
        v.push([eps.clone(), z.clone()]);
        v.push([z, eps.clone()]);
        v.push([&one - eps, one.clone()]);
        v.push([one.clone(), &one - eps]);
    }
    v
}

/// Every product extremal of the eps-parameter-dependent set, deduplicated
/// (1296 points for 0 < eps < 1).
pub fn pd_vertices(eps: &Q) -> Vec<BehaviorQ> {
    let band = band_vertices(eps);
    let n = band.len();
    let one = Q::one();
    let mut out = Vec::with_capacity(n.pow(4));
    for code in 0..n.pow(4) {
        let k = [code % n, code / n % n, code / n / n % n, code / n / n / n];
        let pa = table(|x, y, a| {
            let m = &band[k[x]][y];
            if a == 0 {
                m.clone()
            } else {
                &one - m
            }
        });
        let pb = table(|x, y, b| {
            let m = &band[k[2 + y]][x];
            if b == 0 {
                m.clone()
            } else {
                &one - m
            }
        });
        out.push(product(&pa, &pb));
    }
    crate::geometry::dedupe(&out)
}

/// Uniform dyadic rational k / 2^bits in [0,1].
pub fn dyadic(rng: &mut impl Rng, bits: u32) -> Q {
    let den = 1i64 << bits;
    q(rng.gen_range(0..=den), den)
}

/// Random extremal for the given case, p fixed; each input independently
/// picks one of the four patterns valid for its side's variant.
pub fn random_pd_extremal(p: &Q, case: u8, rng: &mut impl Rng) -> PdExtremal {
    let (va, vb) = match case {
        1 => (Variant::PerfectOne, Variant::PerfectOne),
        2 => (Variant::PerfectZero, Variant::PerfectZero),
        3 => (Variant::PerfectOne, Variant::PerfectZero),
        _ => (Variant::PerfectZero, Variant::PerfectOne),
    };
    let one = Q::one();
    let pattern = |v: Variant, k: usize| -> [Q; 2] {
        // (marginal of output 0 at remote input 0, at remote input 1)
        let pats = match v {
            Variant::PerfectOne => [[p.clone(), qi(0)], [&one - p, one.clone()]],
            Variant::PerfectZero => [[qi(0), p.clone()], [one.clone(), &one - p]],
        };
        match k {
            0 | 1 => pats[k].clone(),
            2 => [qi(0), qi(0)],
            _ => [one.clone(), one.clone()],
        }
    };
    let mut pa: Table = Default::default();
    let mut pb: Table = Default::default();
    for k in 0..2 {
        let m = pattern(va, rng.gen_range(0..4));
        for s in 0..2 {
            pa[k][s] = [m[s].clone(), &one - &m[s]];
        }
        let m = pattern(vb, rng.gen_range(0..4));
        for s in 0..2 {
            pb[s][k] = [m[s].clone(), &one - &m[s]];
        }
    }
    PdExtremal::new(pa, pb, p.clone()).expect("patterns respect epsilon")
}

/// Measurement- and parameter-dependent model. `weights[x][y][l]` = p(l|x,y);
/// responses `pa[l][x][y][a]`, `pb[l][x][y][b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MdPdModel {
    pub weights: [[Vec<Q>; 2]; 2],
    pub pa: Vec<Table>,
    pub pb: Vec<Table>,
    pub l: Q,
    pub epsilon: Q,
}

impl MdPdModel {
    pub fn lambda_count(&self) -> usize {
        self.pa.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lambda_count();
        if self.pb.len() != n {
            return Err(Error::Precondition("response tables disagree on |Lambda|".into()));
        }
        for row in &self.weights {
            for w in row {
                if w.len() != n || w.iter().any(|v| v.is_negative()) || !w.iter().sum::<Q>().is_one() {
                    return Err(Error::Precondition("p(lambda|x,y) is not a distribution".into()));
                }
            }
        }
        for k in 0..n {
            check_table(&self.pa[k], "Alice")?;
            check_table(&self.pb[k], "Bob")?;
            for x in 0..2 {
                let d = (&self.pa[k][x][0][0] - &self.pa[k][x][1][0]).abs();
                let e = (&self.pb[k][0][x][0] - &self.pb[k][1][x][0]).abs();
                if d > self.epsilon || e > self.epsilon {
                    return Err(Error::Precondition(format!(
                        "response dependence above epsilon at lambda {k}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn behavior(&self) -> BehaviorQ {
        Behavior::from_fn(|x, y, a, b| {
            (0..self.lambda_count())
                .map(|k| &self.weights[x][y][k] * &self.pa[k][x][y][a] * &self.pb[k][x][y][b])
                .sum()
        })
    }
}

/// Measurement-independent model over a finite hidden variable.
#[derive(Clone, Debug, PartialEq)]
pub struct PdModel {
    pub weights: Vec<Q>,
    pub pa: Vec<Table>,
    pub pb: Vec<Table>,
}

impl PdModel {
    pub fn behavior(&self) -> BehaviorQ {
        Behavior::from_fn(|x, y, a, b| {
            self.weights
                .iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero())
                .map(|(k, w)| w * &self.pa[k][x][y][a] * &self.pb[k][x][y][b])
                .sum()
        })
    }
}

/// Hidden variable replaced by the tuple (l00, l01, l10, l11) of independent copies.
pub fn md_to_pd(m: &MdPdModel) -> PdModel {
    let n = m.lambda_count();
    let total = n.pow(4);
    let mut weights = Vec::with_capacity(total);
    let mut pa = Vec::with_capacity(total);
    let mut pb = Vec::with_capacity(total);
    for code in 0..total {
        // digit 2x+y of `code` in base n is lambda_{x,y}
        let lam = |x: usize, y: usize| (code / n.pow((2 * x + y) as u32)) % n;
        let w: Q = (0..4)
            .map(|k| m.weights[k / 2][k % 2][lam(k / 2, k % 2)].clone())
            .product();
        weights.push(w);
        pa.push(table(|x, y, a| m.pa[lam(x, y)][x][y][a].clone()));
        pb.push(table(|x, y, b| m.pb[lam(x, y)][x][y][b].clone()));
    }
    PdModel { weights, pa, pb }
}

fn check_l(l: &Q) -> Result<()> {
    if l.is_negative() || l > &q(1, 4) {
        return Err(Error::Domain(format!("l = {} outside [0, 1/4]", fmt_q(l))));
    }
    Ok(())
}

/// (1 - 4l) / (1 - 2l).
pub fn diff_bound(l: &Q) -> Result<Q> {
    check_l(l)?;
    Ok((Q::one() - qi(4) * l) / (Q::one() - qi(2) * l))
}

/// eps + (1 - eps)(1 - 4l)/(1 - 2l).
pub fn kappa(l: &Q, eps: &Q) -> Result<Q> {
    if eps.is_negative() || eps > &Q::one() {
        return Err(Error::Domain(format!("epsilon = {} outside [0, 1]", fmt_q(eps))));
    }
    Ok(eps + (Q::one() - eps) * diff_bound(l)?)
}

/// p = eps v + (1 - eps) u with u independent of y. Tables indexed `[lambda][x][y][a]`,
/// `u` as `[lambda][x][a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalingSplit {
    pub u: Vec<[[Q; 2]; 2]>,
    pub v: Vec<Table>,
    /// nu[lambda][x] = |alpha0 - alpha1|.
    pub nu: Vec<[Q; 2]>,
}

pub fn decompose_signaling_response(pa: &[Table], eps: &Q) -> Result<SignalingSplit> {
    if !eps.is_positive() || eps > &Q::one() {
        return Err(Error::Domain(format!("epsilon = {} outside (0, 1]", fmt_q(eps))));
    }
    let one = Q::one();
    let mut out = SignalingSplit {
        u: Vec::new(),
        v: Vec::new(),
        nu: Vec::new(),
    };
    for (k, t) in pa.iter().enumerate() {
        check_table(t, "response")?;
        let mut u: [[Q; 2]; 2] = Default::default();
        let mut v: Table = Default::default();
        let mut nus: [Q; 2] = Default::default();
        for x in 0..2 {
            let (a0, a1) = (&t[x][0][0], &t[x][1][0]);
            let nu = (a0 - a1).abs();
            if &nu > eps {
                return Err(Error::Precondition(format!(
                    "nu = {} exceeds epsilon at lambda {k}",
                    fmt_q(&nu)
                )));
            }
            // zeta(a|x,y) = delta(a, y) in case (i), delta(a, 1 - y) in case (ii).
            let case_i = a0 >= a1;
            let phi0 = if nu.is_one() {
                q(1, 2)
            } else if case_i {
                a1 / (&one - &nu)
            } else {
                a0 / (&one - &nu)
            };
            let phi = [phi0.clone(), &one - &phi0];
            for y in 0..2 {
                for a in 0..2 {
                    let zeta = if (a == y) == case_i { one.clone() } else { Q::zero() };
                    v[x][y][a] = (&nu / eps) * zeta + ((eps - &nu) / eps) * &phi[a];
                }
            }
            u[x] = phi;
            nus[x] = nu;
        }
        out.u.push(u);
        out.v.push(v);
        out.nu.push(nus);
    }
    Ok(out)
}

impl SignalingSplit {
    pub fn reconstruct(&self, eps: &Q) -> Vec<Table> {
        let one = Q::one();
        (0..self.u.len())
            .map(|k| table(|x, y, a| eps * &self.v[k][x][y][a] + (&one - eps) * &self.u[k][x][a]))
            .collect()
    }
}

/// Joint law over (Lambda, X, Y) as p(lambda) and q(x,y|lambda), the latter `[lambda][2x+y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenLaw {
    pub prior: Vec<Q>,
    pub cond: Vec<[Q; 4]>,
}

impl HiddenLaw {
    pub fn check(&self, l: &Q) -> Result<()> {
        check_l(l)?;
        if self.prior.len() != self.cond.len() || !self.prior.iter().sum::<Q>().is_one() {
            return Err(Error::Precondition("p(lambda) is not a distribution".into()));
        }
        for c in &self.cond {
            if c.iter().any(|v| v < l) || !c.iter().sum::<Q>().is_one() {
                return Err(Error::Precondition(
                    "q(x,y|lambda) below the floor or unnormalized".into(),
                ));
            }
        }
        for k in 0..4 {
            let m: Q = self.prior.iter().zip(&self.cond).map(|(w, c)| w * &c[k]).sum();
            if m != q(1, 4) {
                return Err(Error::Precondition("input marginal q(x,y) differs from 1/4".into()));
            }
        }
        Ok(())
    }

    /// q(lambda | x, y) for input index k = 2x + y.
    pub fn posterior(&self, k: usize) -> Vec<Q> {
        self.prior
            .iter()
            .zip(&self.cond)
            .map(|(w, c)| qi(4) * w * &c[k])
            .collect()
    }

    /// Per-input posteriors `[2x+y][lambda]` in the layout of [`MdPdModel::weights`].
    pub fn weights(&self) -> [[Vec<Q>; 2]; 2] {
        std::array::from_fn(|x| std::array::from_fn(|y| self.posterior(2 * x + y)))
    }
}

/// Largest change of sum_lambda q(lambda|x,y) g(lambda) under a change of one input.
pub fn diff_bound_check(law: &HiddenLaw, g: &[Q], l: &Q) -> Result<Q> {
    law.check(l)?;
    if g.len() != law.prior.len() || !g.iter().all(in_unit) {
        return Err(Error::Precondition("g must map each lambda into [0,1]".into()));
    }
    let avg = |k: usize| -> Q { law.posterior(k).iter().zip(g).map(|(p, v)| p * v).sum() };
    let e: Vec<Q> = (0..4).map(avg).collect();
    // pairs differing in y (same x) and in x (same y)
    let pairs = [(0, 1), (2, 3), (0, 2), (1, 3)];
    Ok(pairs
        .iter()
        .map(|&(i, j)| (&e[i] - &e[j]).abs())
        .max()
        .unwrap_or_else(Q::zero))
}

/// Conditionals (q(.|x,y), q(.|x,y')) over two hidden values that meet the
/// likelihood-ratio limits implied by the floor and reach (1-4l)/(1-2l) with g = [1, 0].
pub fn diff_bound_witness(l: &Q) -> Result<([Q; 2], [Q; 2])> {
    check_l(l)?;
    if l.is_zero() {
        return Ok(([qi(1), qi(0)], [qi(0), qi(1)]));
    }
    let one = Q::one();
    let w = l / (&one - qi(2) * l);
    let hi = (&one - qi(3) * l) / l;
    let lo = l / (&one - qi(3) * l);
    let given_y2 = [w.clone(), &one - &w];
    let given_y = [&w * hi, (&one - &w) * lo];
    Ok((given_y, given_y2))
}

/// One random model with |Lambda| = 2 or 4, dyadic responses and mirrored input laws.
pub fn random_md_model(l: &Q, eps: &Q, rng: &mut impl Rng) -> MdPdModel {
    let pairs = rng.gen_range(1..=2usize);
    let one = Q::one();
    let half = q(1, 2);
    // pair weights w_k with sum 1/2; each pair is (lambda, mirror) with q' = 1/2 - q
    let w: Vec<Q> = if pairs == 1 {
        vec![q(1, 2)]
    } else {
        let a = q(rng.gen_range(1..8), 16);
        vec![a.clone(), &half - a]
    };
    let mut prior = Vec::new();
    let mut cond = Vec::new();
    for wk in &w {
        let d = loop {
            let cuts: Vec<i64> = {
                let mut c: Vec<i64> = (0..3).map(|_| rng.gen_range(0..=16)).collect();
                c.sort();
                c
            };
            let parts = [cuts[0], cuts[1] - cuts[0], cuts[2] - cuts[1], 16 - cuts[2]];
            if parts.iter().all(|&v| v <= 8) {
                break parts.map(|v| q(v, 16));
            }
        };
        let c: [Q; 4] = std::array::from_fn(|k| l + (&one - qi(4) * l) * &d[k]);
        let mirror: [Q; 4] = std::array::from_fn(|k| &half - &c[k]);
        prior.push(wk.clone());
        cond.push(c);
        prior.push(wk.clone());
        cond.push(mirror);
    }
    let law = HiddenLaw { prior, cond };
    let n = law.prior.len();
    let resp = |rng: &mut ChaCha8Rng| -> Table {
        let mut t: Table = Default::default();
        for x in 0..2 {
            let a0 = dyadic(rng, 4);
            let delta = eps * (dyadic(rng, 4) * qi(2) - &one);
            let a1 = (&a0 + delta).clamp(Q::zero(), one.clone());
            for (y, v) in [a0, a1].into_iter().enumerate() {
                t[x][y] = [v.clone(), &one - v];
            }
        }
        t
    };
    let mut local = ChaCha8Rng::seed_from_u64(rng.gen());
    let pa: Vec<Table> = (0..n).map(|_| resp(&mut local)).collect();
    // Bob's tables are sampled in [y][x] orientation, then transposed.
    let pb: Vec<Table> = (0..n)
        .map(|_| {
            let t = resp(&mut local);
            table(|x, y, b| t[y][x][b].clone())
        })
        .collect();
    MdPdModel {
        weights: law.weights(),
        pa,
        pb,
        l: l.clone(),
        epsilon: eps.clone(),
    }
}

#[derive(Clone, Debug)]
pub struct InclusionReport {
    pub l: Q,
    pub epsilon: Q,
    pub kappa: Q,
    pub samples: usize,
    pub seed: u64,
    pub max_signaling: Q,
    /// Indices of samples whose signaling exceeds kappa.
    pub over_kappa: Vec<usize>,
    /// Indices of samples outside the star polytope at kappa.
    pub outside: Vec<usize>,
    /// Indices of samples outside the hull of `pd_vertices(kappa)`.
    pub outside_pd: Vec<usize>,
}

impl InclusionReport {
    pub fn passed(&self) -> bool {
        self.over_kappa.is_empty() && self.outside.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "l": fmt_q(&self.l),
            "epsilon": fmt_q(&self.epsilon),
            "kappa": fmt_q(&self.kappa),
            "samples": self.samples,
            "seed": self.seed,
            "max_signaling": fmt_q(&self.max_signaling),
            "over_kappa": self.over_kappa,
            "outside": self.outside,
            "outside_pd": self.outside_pd,
            "pass": self.passed(),
        })
    }
}

/// Samples models at (l, eps) and checks their behaviors against kappa(l, eps).
pub fn sample_and_verify_inclusion(l: &Q, eps: &Q, samples: usize, seed: u64) -> Result<InclusionReport> {
    let k = kappa(l, eps)?;
    let verts = if k.is_zero() {
        named_polytope(&PolytopeSpec::Plain(ChannelParams::of(
            &q(1, 2),
            &q(1, 2),
            &q(1, 2),
            &q(1, 2),
        )))
        .behaviors()
    } else {
        named_polytope(&PolytopeSpec::Star(k.clone(), k.clone())).behaviors()
    };
    let pd = pd_vertices(&k);
    let results: Vec<(Q, bool, bool)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let m = random_md_model(l, eps, &mut rng);
            let b = m.behavior();
            let (sa, sb) = b.signaling_measures();
            let s = sa.max(sb);
            let mem = membership(&b, &verts);
            let ok = mem.is_inside() && verify_membership(&b, &verts, &mem);
            // only star-polytope misses are checked against the larger set
            let ok_pd = ok || membership(&b, &pd).is_inside();
            (s, ok, ok_pd)
        })
        .collect();
    let mut rep = InclusionReport {
        l: l.clone(),
        epsilon: eps.clone(),
        kappa: k.clone(),
        samples,
        seed,
        max_signaling: Q::zero(),
        over_kappa: Vec::new(),
        outside: Vec::new(),
        outside_pd: Vec::new(),
    };
    for (i, (s, ok, ok_pd)) in results.into_iter().enumerate() {
        if s > k {
            rep.over_kappa.push(i);
        }
        if !ok {
            rep.outside.push(i);
        }
        if !ok_pd {
            rep.outside_pd.push(i);
        }
        if s > rep.max_signaling {
            rep.max_signaling = s;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_endpoints() {
        assert_eq!(kappa(&q(1, 4), &qi(0)).unwrap(), qi(0));
        assert_eq!(kappa(&qi(0), &q(1, 3)).unwrap(), qi(1));
        assert_eq!(kappa(&q(1, 8), &qi(1)).unwrap(), qi(1));
        assert_eq!(kappa(&q(1, 8), &q(1, 4)).unwrap(), q(3, 4));
        assert!(kappa(&q(1, 3), &qi(0)).is_err());
    }

    #[test]
    fn local_part_example() {
        let t: Table = table(|_, y, a| {
            let a0 = if y == 0 { q(3, 4) } else { q(1, 4) };
            if a == 0 {
                a0.clone()
            } else {
                qi(1) - a0
            }
        });
        let s = decompose_signaling_response(&[t.clone()], &q(1, 2)).unwrap();
        assert_eq!(s.nu[0][0], q(1, 2));
        assert_eq!(s.u[0][0], [q(1, 2), q(1, 2)]);
        assert_eq!(s.v[0][0][0], [qi(1), qi(0)]);
        assert_eq!(s.v[0][0][1], [qi(0), qi(1)]);
        assert_eq!(s.reconstruct(&q(1, 2)), vec![t]);
    }

    #[test]
    fn witness_reaches_bound() {
        for l in [q(1, 8), q(1, 6), q(1, 5)] {
            let (a, b) = diff_bound_witness(&l).unwrap();
            assert_eq!(&a[0] + &a[1], qi(1));
            assert_eq!(&a[0] - &b[0], diff_bound(&l).unwrap());
        }
    }
}
