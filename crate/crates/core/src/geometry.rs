//! Convex-hull membership with certificates, affine dimension, extreme points,
//! facet checks and the non-signaling projection.
//!
//! Every verdict is exact. A float solve proposes the answer, which is then
//! confirmed with a small exact LP or an exactly checked separating functional;
//! when confirmation fails the full exact LP decides.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::behavior::{BehaviorQ, NsConstraint};
use crate::lp::{self, LpOutcome};
use crate::scalar::{fmt_q, q_from_f64, Scalar, Q};

#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    /// Convex weights, one per vertex, reconstructing the query exactly.
    InHull { weights: Vec<Q> },
    /// `<functional, v> <= offset` on every vertex and `> offset` on the query.
    Outside { functional: [[Q; 4]; 4], offset: Q },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::InHull { .. })
    }

    pub fn to_json(&self) -> Value {
        match self {
            Membership::InHull { weights } => json!({
                "verdict": "InHull",
                "weights": weights.iter().map(fmt_q).collect::<Vec<_>>(),
            }),
            Membership::Outside { functional, offset } => json!({
                "verdict": "Outside",
                "certificate": functional.iter().map(|r| r.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "offset": fmt_q(offset),
            }),
        }
    }
}

fn columns<T: Scalar>(verts: &[BehaviorQ], conv: impl Fn(&Q) -> T) -> Vec<Vec<T>> {
    // 16 coordinate rows plus the convexity row.
    let mut a = vec![Vec::with_capacity(verts.len()); 17];
    for v in verts {
        for (k, e) in v.flat().iter().enumerate() {
            a[k].push(conv(e));
        }
        a[16].push(T::one());
    }
    a
}

fn rhs<T: Scalar>(b: &BehaviorQ, conv: impl Fn(&Q) -> T) -> Vec<T> {
    let mut r: Vec<T> = b.flat().iter().map(conv).collect();
    r.push(T::one());
    r
}

fn exact_lp(b: &BehaviorQ, verts: &[BehaviorQ]) -> LpOutcome<Q> {
    lp::feasible(&columns(verts, Q::clone), &rhs(b, Q::clone))
}

fn certificate_from(y: &[Q]) -> [[Q; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| y[4 * i + j].clone()))
}

/// Exact check of a candidate separating functional; returns the tight offset.
fn check_separation(f: &[[Q; 4]; 4], b: &BehaviorQ, verts: &[BehaviorQ]) -> Option<Q> {
    let mut t: Option<Q> = None;
    for v in verts {
        let s = v.dot(f);
        if t.as_ref().is_none_or(|m| &s > m) {
            t = Some(s);
        }
    }
    let t = t?;
    (b.dot(f) > t).then_some(t)
}

fn round_q(x: f64) -> Q {
    // 2^-30 grid keeps the rational small while preserving float accuracy.
    let scale = (1u64 << 30) as f64;
    q_from_f64((x * scale).round()).unwrap_or_else(Q::zero) / Q::from_integer((1u64 << 30).into())
}

/// Exact membership of `b` in hull(verts).
pub fn membership(b: &BehaviorQ, verts: &[BehaviorQ]) -> Membership {
    assert!(!verts.is_empty(), "membership needs a nonempty vertex set");
    let to_f = |v: &Q| v.to_f64();
    match lp::feasible(&columns(verts, to_f), &rhs(b, to_f)) {
        LpOutcome::Optimal { x, .. } => {
            let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 1e-12).collect();
            let sub: Vec<BehaviorQ> = support.iter().map(|&i| verts[i].clone()).collect();
            if !sub.is_empty() {
                if let LpOutcome::Optimal { x: w, .. } = exact_lp(b, &sub) {
                    let mut weights = vec![Q::zero(); verts.len()];
                    for (k, &i) in support.iter().enumerate() {
                        weights[i] = w[k].clone();
                    }
                    return Membership::InHull { weights };
                }
            }
        }
        LpOutcome::Infeasible { farkas } => {
            let f = certificate_from(&farkas.iter().map(|v| round_q(*v)).collect::<Vec<_>>());
            if let Some(offset) = check_separation(&f, b, verts) {
                return Membership::Outside { functional: f, offset };
            }
        }
        LpOutcome::Unbounded => {}
    }
    exact_membership(b, verts)
}

/// Membership decided by the exact LP alone.
pub fn exact_membership(b: &BehaviorQ, verts: &[BehaviorQ]) -> Membership {
    match exact_lp(b, verts) {
        LpOutcome::Optimal { x, .. } => Membership::InHull { weights: x },
        LpOutcome::Infeasible { farkas } => {
            let f = certificate_from(&farkas);
            let offset = -farkas[16].clone();
            Membership::Outside { functional: f, offset }
        }
        LpOutcome::Unbounded => unreachable!("feasibility problems are bounded"),
    }
}

/// Checks the certificate or weights against the vertex set.
pub fn verify_membership(b: &BehaviorQ, verts: &[BehaviorQ], m: &Membership) -> bool {
    match m {
        Membership::InHull { weights } => {
            if weights.len() != verts.len() || weights.iter().any(|w| w.is_negative()) {
                return false;
            }
            let total: Q = weights.iter().sum();
            if !total.is_one() {
                return false;
            }
            let mut acc = vec![Q::zero(); 16];
            for (w, v) in weights.iter().zip(verts) {
                if w.is_zero() {
                    continue;
                }
                for (k, e) in v.flat().iter().enumerate() {
                    acc[k] += w * e;
                }
            }
            acc == b.flat()
        }
        Membership::Outside { functional, offset } => {
            verts.iter().all(|v| &v.dot(functional) <= offset) && &b.dot(functional) > offset
        }
    }
}

pub fn dedupe(points: &[BehaviorQ]) -> Vec<BehaviorQ> {
    let mut seen = BTreeSet::new();
    points.iter().filter(|p| seen.insert(p.flat())).cloned().collect()
}

/// Rank of a list of rational row vectors.
pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut basis: Vec<(usize, Vec<Q>)> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for (col, b) in &basis {
            if !v[*col].is_zero() {
                let f = v[*col].clone() / &b[*col];
                for k in 0..v.len() {
                    if !b[k].is_zero() {
                        let d = &f * &b[k];
                        v[k] -= d;
                    }
                }
            }
        }
        if let Some(col) = (0..v.len()).find(|&k| !v[k].is_zero()) {
            basis.push((col, v));
        }
    }
    basis.len()
}

/// Affine dimension: rank of the differences to the first point.
pub fn affine_dimension(points: &[BehaviorQ]) -> usize {
    let pts = dedupe(points);
    if pts.len() <= 1 {
        return 0;
    }
    let base = pts[0].flat();
    let diffs: Vec<Vec<Q>> = pts[1..]
        .iter()
        .map(|p| p.flat().iter().zip(&base).map(|(a, b)| a - b).collect())
        .collect();
    rank(&diffs)
}

/// Points not in the hull of the others (after deduplication).
pub fn extreme_points(points: &[BehaviorQ]) -> Vec<BehaviorQ> {
    let pts = dedupe(points);
    if pts.len() <= 1 {
        return pts;
    }
    let keep: Vec<bool> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let others: Vec<BehaviorQ> = pts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| p.clone())
                .collect();
            !membership(&pts[i], &others).is_inside()
        })
        .collect();
    pts.into_iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    /// `<F,P> <= bound`
    Le,
    /// `<F,P> >= bound`
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacetReport {
    pub valid: bool,
    pub saturators: usize,
    pub saturator_rank: usize,
    pub polytope_dim: usize,
    pub is_facet: bool,
    pub max_value: Q,
    pub min_value: Q,
}

pub fn verify_facet(coeffs: &[[Q; 4]; 4], bound: &Q, sense: Sense, verts: &[BehaviorQ]) -> FacetReport {
    let pts = dedupe(verts);
    let vals: Vec<Q> = pts.iter().map(|v| v.dot(coeffs)).collect();
    let valid = vals.iter().all(|v| match sense {
        Sense::Le => v <= bound,
        Sense::Ge => v >= bound,
    });
    let sat: Vec<BehaviorQ> = pts
        .iter()
        .zip(&vals)
        .filter(|(_, v)| *v == bound)
        .map(|(p, _)| p.clone())
        .collect();
    let saturator_rank = affine_dimension(&sat);
    let polytope_dim = affine_dimension(&pts);
    FacetReport {
        valid,
        saturators: sat.len(),
        saturator_rank,
        polytope_dim,
        is_facet: valid && !sat.is_empty() && saturator_rank + 1 == polytope_dim,
        max_value: vals.iter().max().cloned().unwrap_or_else(Q::zero),
        min_value: vals.iter().min().cloned().unwrap_or_else(Q::zero),
    }
}

/// One projection step: keep points on the hyperplane, add every crossing of a
/// segment joining points on opposite sides.
pub fn ns_project_step(points: &[BehaviorQ], c: NsConstraint) -> Vec<BehaviorQ> {
    let m = c.matrix_as::<Q>();
    let mut on = Vec::new();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for p in points {
        let o = p.dot(&m);
        if o.is_zero() {
            on.push(p.clone());
        } else if o.is_positive() {
            pos.push((p, o));
        } else {
            neg.push((p, o));
        }
    }
    for (pj, oj) in &pos {
        for (pk, ok) in &neg {
            // alpha oj + (1 - alpha) ok = 0
            let alpha = -ok.clone() / (oj - ok);
            on.push(pj.combine(&alpha, pk));
        }
    }
    dedupe(&on)
}

/// Whether `verts[j]` and `verts[k]` span an edge of hull(verts), for a set of
/// extreme points. They do exactly when the line through them misses the hull
/// of the remaining points, which is a membership query after projecting out
/// the line direction.
pub fn is_edge(verts: &[BehaviorQ], j: usize, k: usize) -> bool {
    let d: Vec<Q> = verts[j]
        .flat()
        .iter()
        .zip(verts[k].flat())
        .map(|(a, b)| a - b)
        .collect();
    let dd: Q = d.iter().map(|v| v * v).sum();
    if dd.is_zero() {
        return false;
    }
    let proj = |b: &BehaviorQ| -> BehaviorQ {
        let f = b.flat();
        let s = f.iter().zip(&d).map(|(a, b)| a * b).sum::<Q>() / &dd;
        let v: Vec<Q> = f.iter().zip(&d).map(|(a, b)| a - &s * b).collect();
        BehaviorQ::from_flat(&v).expect("16 entries")
    };
    let others: Vec<BehaviorQ> = verts
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != j && *i != k)
        .map(|(_, v)| proj(v))
        .collect();
    others.is_empty() || !membership(&proj(&verts[k]), &others).is_inside()
}

/// Vertices of hull(verts) on the hyperplane, given the extreme points of the
/// hull: those already on it plus the crossing of every edge that straddles it.
pub fn ns_project_edge_step(verts: &[BehaviorQ], c: NsConstraint) -> Vec<BehaviorQ> {
    let m = c.matrix_as::<Q>();
    let o: Vec<Q> = verts.iter().map(|p| p.dot(&m)).collect();
    let mut out: Vec<BehaviorQ> = verts
        .iter()
        .zip(&o)
        .filter(|(_, v)| v.is_zero())
        .map(|(p, _)| p.clone())
        .collect();
    let pairs: Vec<(usize, usize)> = (0..verts.len())
        .filter(|&j| o[j].is_positive())
        .flat_map(|j| (0..verts.len()).filter(|&k| o[k].is_negative()).map(move |k| (j, k)))
        .collect();
    let crossings: Vec<BehaviorQ> = pairs
        .par_iter()
        .filter(|&&(j, k)| is_edge(verts, j, k))
        .map(|&(j, k)| {
            let alpha = -o[k].clone() / (&o[j] - &o[k]);
            verts[j].combine(&alpha, &verts[k])
        })
        .collect();
    out.extend(crossings);
    dedupe(&out)
}

/// Vertices of the hull cut by `NS_c = 0` for each `c` in `order`. With `prune`
/// the result is the exact vertex set, found by LP and certified against the
/// facets of the candidate hull. Without it the constraints are processed in
/// order and every straddling pair is crossed.
pub fn ns_project(points: &[BehaviorQ], order: &[NsConstraint], prune: bool) -> Vec<BehaviorQ> {
    if prune {
        return crate::hull::slice_vertices(points, order);
    }
    let mut cur = dedupe(points);
    for c in order {
        if cur.iter().all(|p| p.dot(&c.matrix_as::<Q>()).is_zero()) {
            continue;
        }
        cur = ns_project_step(&cur, *c);
    }
    cur
}

/// Same vertex set as `ns_project` with pruning, one constraint at a time
/// through `ns_project_edge_step`.
pub fn ns_project_by_edges(points: &[BehaviorQ], order: &[NsConstraint]) -> Vec<BehaviorQ> {
    let mut cur = extreme_points(points);
    for c in order {
        if cur.iter().all(|p| p.dot(&c.matrix_as::<Q>()).is_zero()) {
            continue;
        }
        cur = ns_project_edge_step(&cur, *c);
    }
    cur
}

pub const DEFAULT_NS_ORDER: [NsConstraint; 4] = [
    NsConstraint::AtoB(0),
    NsConstraint::AtoB(1),
    NsConstraint::BtoA(0),
    NsConstraint::BtoA(1),
];

fn permutations(items: &[NsConstraint]) -> Vec<Vec<NsConstraint>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Extreme points of the union of projections over all 24 constraint orders.
pub fn ns_project_all_orders(points: &[BehaviorQ]) -> Vec<BehaviorQ> {
    let base = extreme_points(points);
    let mut all = Vec::new();
    for order in permutations(&DEFAULT_NS_ORDER) {
        all.extend(ns_project_by_edges(&base, &order));
    }
    extreme_points(&all)
}

/// Every extreme point of each set lies in the hull of the other.
pub fn hull_equal(a: &[BehaviorQ], b: &[BehaviorQ]) -> bool {
    let ea = extreme_points(a);
    let eb = extreme_points(b);
    ea.par_iter().all(|p| membership(p, &eb).is_inside()) && eb.par_iter().all(|p| membership(p, &ea).is_inside())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::Behavior;
    use crate::scalar::q;

    fn det16() -> Vec<BehaviorQ> {
        let mut v = Vec::new();
        for k in 0..16usize {
            v.push(Behavior::deterministic([k & 1, k >> 1 & 1], [k >> 2 & 1, k >> 3 & 1]));
        }
        v
    }

    #[test]
    fn uniform_inside_pr_outside() {
        let d = det16();
        let m = membership(&BehaviorQ::uniform(), &d);
        assert!(m.is_inside() && verify_membership(&BehaviorQ::uniform(), &d, &m));
        let pr = BehaviorQ::pr_box();
        let m = membership(&pr, &d);
        assert!(!m.is_inside() && verify_membership(&pr, &d, &m));
        let e = exact_membership(&pr, &d);
        assert!(verify_membership(&pr, &d, &e));
    }

    #[test]
    fn ranks() {
        assert_eq!(affine_dimension(&det16()), 8);
        assert_eq!(affine_dimension(&det16()[..1]), 0);
        let mut pts = det16();
        pts.push(BehaviorQ::uniform());
        assert_eq!(extreme_points(&pts).len(), 16);
    }

    #[test]
    fn projection_of_ns_set_is_identity() {
        let d = det16();
        let out = ns_project(&d, &DEFAULT_NS_ORDER, false);
        assert_eq!(dedupe(&out).len(), 16);
        let half = Behavior::deterministic([0, 0], [0, 0]).combine(&q(1, 2), &d[5]);
        assert!(membership(&half, &d).is_inside());
    }
}
