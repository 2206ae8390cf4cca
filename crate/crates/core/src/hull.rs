//! Exact facet enumeration by double description, and exact vertex enumeration
//! of a polytope cut by non-signaling equations.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::behavior::{BehaviorQ, NsConstraint};
use crate::lp::{self, LpOutcome};
use crate::scalar::{approximate, Scalar, Q};

/// `<coeffs, x> <= bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub coeffs: [[Q; 4]; 4],
    pub bound: Q,
}

impl Halfspace {
    pub fn value(&self, b: &BehaviorQ) -> Q {
        b.dot(&self.coeffs)
    }

    pub fn holds(&self, b: &BehaviorQ) -> bool {
        self.value(b) <= self.bound
    }
}

fn to_matrix(v: &[Q]) -> [[Q; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| v[4 * i + j].clone()))
}

/// Affine frame of a point set: base point, coordinates that parametrize the
/// affine hull, and the equations cutting it out.
#[derive(Clone, Debug)]
struct Frame {
    coords: Vec<usize>,
    equations: Vec<(Vec<Q>, Q)>,
}

impl Frame {
    fn of(points: &[BehaviorQ]) -> Frame {
        let base = points[0].flat();
        // reduced row echelon form of the differences
        let mut rows: Vec<Vec<Q>> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        for p in &points[1..] {
            let mut v: Vec<Q> = p.flat().iter().zip(&base).map(|(a, b)| a - b).collect();
            for (r, &c) in rows.iter().zip(&pivots) {
                if !v[c].is_zero() {
                    let f = v[c].clone();
                    for k in 0..16 {
                        if !r[k].is_zero() {
                            v[k] -= &f * &r[k];
                        }
                    }
                }
            }
            let Some(c) = (0..16).find(|&k| !v[k].is_zero()) else {
                continue;
            };
            let inv = Q::one() / &v[c];
            for e in v.iter_mut() {
                *e *= &inv;
            }
            for r in rows.iter_mut() {
                if !r[c].is_zero() {
                    let f = r[c].clone();
                    for k in 0..16 {
                        if !v[k].is_zero() {
                            r[k] -= &f * &v[k];
                        }
                    }
                }
            }
            rows.push(v);
            pivots.push(c);
        }
        let mut equations = Vec::new();
        for f in (0..16).filter(|k| !pivots.contains(k)) {
            let mut h = vec![Q::zero(); 16];
            h[f] = Q::one();
            for (r, &c) in rows.iter().zip(&pivots) {
                h[c] = -r[f].clone();
            }
            let g = h.iter().zip(&base).map(|(a, b)| a * b).sum();
            equations.push((h, g));
        }
        let mut coords = pivots;
        coords.sort();
        Frame { coords, equations }
    }

    fn dim(&self) -> usize {
        self.coords.len()
    }

    /// (1, x[coords]) scaled to a primitive integer vector.
    fn row(&self, b: &BehaviorQ) -> Vec<BigInt> {
        let f = b.flat();
        let mut v: Vec<Q> = vec![Q::one()];
        v.extend(self.coords.iter().map(|&k| f[k].clone()));
        let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        v.iter().map(|x| x.numer() * (&l / x.denom())).collect()
    }
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn primitive(mut a: Vec<BigInt>) -> Vec<BigInt> {
    let g = a.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in a.iter_mut() {
            *x = &*x / &g;
        }
    }
    a
}

type Bits = Vec<u64>;

fn set_bit(b: &mut Bits, i: usize) {
    if b.len() <= i / 64 {
        b.resize(i / 64 + 1, 0);
    }
    b[i / 64] |= 1 << (i % 64);
}

fn has_bit(b: &Bits, i: usize) -> bool {
    b.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
}

fn and(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn count(b: &Bits) -> u32 {
    b.iter().map(|w| w.count_ones()).sum()
}

fn subset(a: &Bits, b: &Bits) -> bool {
    a.iter()
        .enumerate()
        .all(|(i, w)| w & !b.get(i).copied().unwrap_or(0) == 0)
}

#[derive(Clone, Debug)]
struct Ray {
    a: Vec<BigInt>,
    /// Points on which the ray's inequality is tight.
    tight: Bits,
}

/// Facets of the convex hull of a growing point set, maintained incrementally.
#[derive(Clone, Debug)]
pub struct Hull {
    frame: Frame,
    points: Vec<BehaviorQ>,
    keys: BTreeSet<Vec<Q>>,
    rays: Vec<Ray>,
}

impl Hull {
    /// Builds the hull of `points` inside their own affine hull. Needs at least two distinct points.
    pub fn new(points: &[BehaviorQ]) -> Option<Hull> {
        let pts = crate::geometry::dedupe(points);
        if pts.len() < 2 {
            return None;
        }
        let frame = Frame::of(&pts);
        let d = frame.dim();
        let rows: Vec<Vec<BigInt>> = pts.iter().map(|p| frame.row(p)).collect();
        // d + 1 independent rows
        let mut chosen: Vec<usize> = Vec::new();
        let mut basis: Vec<Vec<Q>> = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let q: Vec<Q> = r.iter().map(|x| Q::from_integer(x.clone())).collect();
            let mut trial = basis.clone();
            trial.push(q);
            if crate::geometry::rank(&trial) == trial.len() {
                basis = trial;
                chosen.push(i);
                if chosen.len() == d + 1 {
                    break;
                }
            }
        }
        let inv = invert(&basis)?;
        let mut rays = Vec::with_capacity(d + 1);
        for j in 0..=d {
            let col: Vec<Q> = (0..=d).map(|i| inv[i][j].clone()).collect();
            let l = col.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            let a = primitive(col.iter().map(|x| x.numer() * (&l / x.denom())).collect());
            let mut tight = Bits::new();
            for (k, &i) in chosen.iter().enumerate() {
                if k != j {
                    set_bit(&mut tight, i);
                }
            }
            rays.push(Ray { a, tight });
        }
        let mut hull = Hull {
            frame,
            points: pts.clone(),
            keys: pts.iter().map(|p| p.flat()).collect(),
            rays,
        };
        // rows are indexed by position in `pts`
        for (i, r) in rows.iter().enumerate() {
            if !chosen.contains(&i) {
                hull.insert_row(i, r);
            }
        }
        Some(hull)
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    /// Affine equations `<h, x> = g` satisfied by every point.
    pub fn equations(&self) -> Vec<([[Q; 4]; 4], Q)> {
        self.frame
            .equations
            .iter()
            .map(|(h, g)| (to_matrix(h), g.clone()))
            .collect()
    }

    /// Adds a point of the same affine hull; returns false if it was already present.
    pub fn add(&mut self, b: &BehaviorQ) -> bool {
        assert!(
            self.frame
                .equations
                .iter()
                .all(|(h, g)| &b.flat().iter().zip(h).map(|(x, y)| x * y).sum::<Q>() == g),
            "point outside the affine hull"
        );
        if !self.keys.insert(b.flat()) {
            return false;
        }
        let i = self.points.len();
        self.points.push(b.clone());
        let row = self.frame.row(b);
        self.insert_row(i, &row);
        true
    }

    fn insert_row(&mut self, idx: usize, h: &[BigInt]) {
        let d = self.frame.dim();
        let vals: Vec<BigInt> = self.rays.par_iter().map(|r| dot(h, &r.a)).collect();
        let pos: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].is_positive()).collect();
        let neg: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].is_negative()).collect();
        if neg.is_empty() {
            for (r, v) in self.rays.iter_mut().zip(&vals) {
                if v.is_zero() {
                    set_bit(&mut r.tight, idx);
                }
            }
            return;
        }
        let rays = &self.rays;
        let pairs: Vec<(usize, usize)> = pos.iter().flat_map(|&p| neg.iter().map(move |&n| (p, n))).collect();
        let fresh: Vec<Ray> = pairs
            .par_iter()
            .filter_map(|&(p, n)| {
                let common = and(&rays[p].tight, &rays[n].tight);
                if (count(&common) as usize) + 1 < d {
                    return None;
                }
                let blocked = rays
                    .iter()
                    .enumerate()
                    .any(|(k, r)| k != p && k != n && subset(&common, &r.tight));
                if blocked {
                    return None;
                }
                let a: Vec<BigInt> = rays[n]
                    .a
                    .iter()
                    .zip(&rays[p].a)
                    .map(|(an, ap)| &vals[p] * an - &vals[n] * ap)
                    .collect();
                let mut tight = common;
                set_bit(&mut tight, idx);
                Some(Ray { a: primitive(a), tight })
            })
            .collect();
        let mut next: Vec<Ray> = Vec::with_capacity(self.rays.len() + fresh.len());
        for (mut r, v) in std::mem::take(&mut self.rays).into_iter().zip(&vals) {
            if v.is_zero() {
                set_bit(&mut r.tight, idx);
                next.push(r);
            } else if v.is_positive() {
                next.push(r);
            }
        }
        next.extend(fresh);
        self.rays = next;
    }

    /// Facet inequalities of the hull, relative to its affine hull.
    pub fn facets(&self) -> Vec<Halfspace> {
        self.rays.iter().map(|r| self.halfspace(r)).collect()
    }

    fn halfspace(&self, r: &Ray) -> Halfspace {
        let mut c = vec![Q::zero(); 16];
        for (k, &j) in self.frame.coords.iter().enumerate() {
            c[j] = -Q::from_integer(r.a[k + 1].clone());
        }
        Halfspace {
            coeffs: to_matrix(&c),
            bound: Q::from_integer(r.a[0].clone()),
        }
    }

    /// Points of the set that are vertices of the hull.
    pub fn vertices(&self) -> Vec<BehaviorQ> {
        let n = self.points.len();
        let incidence: Vec<Bits> = (0..n)
            .map(|i| {
                let mut b = Bits::new();
                for (k, r) in self.rays.iter().enumerate() {
                    if has_bit(&r.tight, i) {
                        set_bit(&mut b, k);
                    }
                }
                b
            })
            .collect();
        (0..n)
            .filter(|&i| !(0..n).any(|j| j != i && subset(&incidence[i], &incidence[j])))
            .map(|i| self.points[i].clone())
            .collect()
    }
}

fn invert(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = r.clone();
            v.extend((0..n).map(|k| if k == i { Q::one() } else { Q::zero() }));
            v
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, p);
        let inv = Q::one() / &a[c][c];
        for e in a[c].iter_mut() {
            *e *= &inv;
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                let pr = a[c].clone();
                for (e, x) in a[r].iter_mut().zip(&pr) {
                    *e -= &f * x;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Exact linear optimization over `hull(verts)` intersected with `NS_c = 0`
/// for each listed constraint.
pub struct Slice {
    verts: Vec<BehaviorQ>,
    over: Vec<Vec<Q>>,
    af: Vec<Vec<f64>>,
    bf: Vec<f64>,
}

impl Slice {
    pub fn new(verts: &[BehaviorQ], cons: &[NsConstraint]) -> Slice {
        let verts = crate::geometry::dedupe(verts);
        let over: Vec<Vec<Q>> = verts
            .iter()
            .map(|v| cons.iter().map(|c| v.ns_overlap(*c)).collect())
            .collect();
        let m = cons.len();
        let mut af = vec![Vec::with_capacity(verts.len()); m + 1];
        for o in &over {
            for k in 0..m {
                af[k].push(o[k].to_f64());
            }
            af[m].push(1.0);
        }
        let mut bf = vec![0.0; m];
        bf.push(1.0);
        Slice { verts, over, af, bf }
    }

    fn exact_rows(&self, cols: &[usize]) -> (Vec<Vec<Q>>, Vec<Q>) {
        let m = self.af.len() - 1;
        let mut a = vec![Vec::with_capacity(cols.len()); m + 1];
        for &i in cols {
            for k in 0..m {
                a[k].push(self.over[i][k].clone());
            }
            a[m].push(Q::one());
        }
        let mut b = vec![Q::zero(); m];
        b.push(Q::one());
        (a, b)
    }

    fn point(&self, cols: &[usize], w: &[Q]) -> BehaviorQ {
        let mut acc = vec![Q::zero(); 16];
        for (&i, wi) in cols.iter().zip(w) {
            if wi.is_zero() {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(self.verts[i].flat()) {
                *a += wi * v;
            }
        }
        BehaviorQ::from_flat(&acc).expect("16 entries")
    }

    /// Exact maximum of `<c, x>` over the slice with a maximizer, or `None` when the slice is empty.
    pub fn maximize(&self, c: &[[Q; 4]; 4]) -> Option<(Q, BehaviorQ)> {
        let g: Vec<Q> = self.verts.iter().map(|v| v.dot(c)).collect();
        let gf: Vec<f64> = g.iter().map(|v| v.to_f64()).collect();
        if let (LpOutcome::Optimal { x, .. }, Some(y)) = lp::solve_with_dual(&self.af, &self.bf, &gf) {
            let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 1e-12).collect();
            let (a, b) = self.exact_rows(&support);
            let gs: Vec<Q> = support.iter().map(|&i| g[i].clone()).collect();
            if let LpOutcome::Optimal { x: w, value } = lp::solve(&a, &b, &gs) {
                // dual check: max_i (g_i - y . o_i) must equal the primal value
                let m = self.af.len() - 1;
                let yq: Vec<Q> = y[..m].iter().map(|v| approximate(*v, 1 << 24)).collect();
                let certified = self.verts.iter().enumerate().all(|(i, _)| {
                    let s: Q = (0..m).map(|k| &yq[k] * &self.over[i][k]).sum();
                    &g[i] - s <= value
                });
                if certified {
                    return Some((value, self.point(&support, &w)));
                }
            }
        }
        let all: Vec<usize> = (0..self.verts.len()).collect();
        let (a, b) = self.exact_rows(&all);
        match lp::solve(&a, &b, &g) {
            LpOutcome::Optimal { x, value } => Some((value, self.point(&all, &x))),
            _ => None,
        }
    }

    /// The listed vertices that already satisfy every equation.
    pub fn members(&self) -> Vec<BehaviorQ> {
        self.verts
            .iter()
            .zip(&self.over)
            .filter(|(_, o)| o.iter().all(|v| v.is_zero()))
            .map(|(v, _)| v.clone())
            .collect()
    }
}

/// Exact vertex set of `hull(verts)` intersected with the hyperplanes of `cons`,
/// grown from LP maximizers until every facet of the candidate hull is valid.
pub fn slice_vertices(verts: &[BehaviorQ], cons: &[NsConstraint]) -> Vec<BehaviorQ> {
    let slice = Slice::new(verts, cons);
    let mut cand = slice.members();
    for k in 0..16 {
        for s in [1, -1] {
            let mut c = vec![Q::zero(); 16];
            c[k] = Q::from_integer(s.into());
            match slice.maximize(&to_matrix(&c)) {
                Some((_, x)) => cand.push(x),
                None => return Vec::new(),
            }
        }
    }
    cand = crate::geometry::dedupe(&cand);
    // grow until the candidates span the slice's affine hull
    loop {
        if cand.len() < 2 {
            return cand;
        }
        let frame = Frame::of(&cand);
        let mut grew = false;
        for (h, g) in &frame.equations {
            for s in [1i64, -1] {
                let hs: Vec<Q> = h.iter().map(|v| v * Q::from_integer(s.into())).collect();
                let gs = g * Q::from_integer(s.into());
                if let Some((v, x)) = slice.maximize(&to_matrix(&hs)) {
                    if v > gs {
                        cand.push(x);
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            break;
        }
        cand = crate::geometry::dedupe(&cand);
    }
    let mut hull = Hull::new(&cand).expect("at least two points");
    let mut checked: BTreeSet<Vec<BigInt>> = BTreeSet::new();
    loop {
        let todo: Vec<Ray> = hull.rays.iter().filter(|r| !checked.contains(&r.a)).cloned().collect();
        let found: Vec<BehaviorQ> = todo
            .par_iter()
            .filter_map(|r| {
                let h = hull.halfspace(r);
                let (v, x) = slice.maximize(&h.coeffs)?;
                (v > h.bound).then_some(x)
            })
            .collect();
        for r in todo {
            checked.insert(r.a);
        }
        let mut added = false;
        for x in &found {
            added |= hull.add(x);
        }
        if !added {
            break;
        }
    }
    hull.vertices()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det16() -> Vec<BehaviorQ> {
        (0..16usize)
            .map(|k| BehaviorQ::deterministic([k & 1, k >> 1 & 1], [k >> 2 & 1, k >> 3 & 1]))
            .collect()
    }

    #[test]
    fn local_polytope_facets() {
        let h = Hull::new(&det16()).unwrap();
        assert_eq!(h.dim(), 8);
        // 16 positivity facets plus 8 CHSH-type facets
        assert_eq!(h.facets().len(), 24);
        assert_eq!(h.vertices().len(), 16);
        for f in h.facets() {
            assert!(det16().iter().all(|v| f.holds(v)));
        }
    }

    #[test]
    fn interior_points_are_not_vertices() {
        let mut pts = det16();
        pts.push(BehaviorQ::uniform());
        let h = Hull::new(&pts).unwrap();
        assert_eq!(h.vertices().len(), 16);
    }
}
