//! Local relabelings: input flips, input-dependent output flips, party swap.

use std::collections::BTreeSet;

use crate::behavior::{idx, Behavior};
use crate::scalar::{Scalar, Q};

/// Maps P to Q with Q(a',b'|x',y') = P(a'^fa[x'], b'^fb[y'] | x'^fx, y'^fy),
/// after transposing parties when `swap` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Relabeling {
    pub flip_x: bool,
    pub flip_y: bool,
    pub flip_a: [bool; 2],
    pub flip_b: [bool; 2],
    pub swap: bool,
}

impl Relabeling {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_code(code: u8) -> Self {
        let bit = |k: u8| code >> k & 1 == 1;
        Relabeling {
            flip_x: bit(0),
            flip_y: bit(1),
            flip_a: [bit(2), bit(3)],
            flip_b: [bit(4), bit(5)],
            swap: bit(6),
        }
    }

    pub fn code(&self) -> u8 {
        (self.flip_x as u8)
            | (self.flip_y as u8) << 1
            | (self.flip_a[0] as u8) << 2
            | (self.flip_a[1] as u8) << 3
            | (self.flip_b[0] as u8) << 4
            | (self.flip_b[1] as u8) << 5
            | (self.swap as u8) << 6
    }

    pub fn apply<T: Scalar>(&self, p: &Behavior<T>) -> Behavior<T> {
        let src = if self.swap { p.transpose() } else { p.clone() };
        Behavior::from_fn(|x, y, a, b| {
            let sx = x ^ self.flip_x as usize;
            let sy = y ^ self.flip_y as usize;
            let sa = a ^ self.flip_a[x] as usize;
            let sb = b ^ self.flip_b[y] as usize;
            src.m[idx(sx, sa)][idx(sy, sb)].clone()
        })
    }

    /// The element acting as `then` after `self`.
    pub fn compose(&self, then: &Relabeling) -> Relabeling {
        let probe = probe_behavior();
        let target = then.apply(&self.apply(&probe));
        (0..128u8)
            .map(Relabeling::from_code)
            .find(|r| r.apply(&probe) == target)
            .expect("relabelings form a group")
    }

    pub fn inverse(&self) -> Relabeling {
        let id = Relabeling::identity();
        (0..128u8)
            .map(Relabeling::from_code)
            .find(|r| self.compose(r) == id)
            .unwrap()
    }
}

/// A behavior-shaped array with 16 distinct entries, used to identify group elements.
fn probe_behavior() -> Behavior<Q> {
    Behavior::from_fn(|x, y, a, b| Q::from_integer((8 * x + 4 * y + 2 * a + b).into()))
}

/// 64 elements without party swap, 128 with.
pub fn group(with_swap: bool) -> Vec<Relabeling> {
    let n = if with_swap { 128 } else { 64 };
    (0..n as u8).map(Relabeling::from_code).collect()
}

pub fn orbit<T: Scalar>(p: &Behavior<T>, g: &[Relabeling]) -> Vec<Behavior<T>> {
    let mut out: Vec<Behavior<T>> = Vec::new();
    for r in g {
        let q = r.apply(p);
        if !out.iter().any(|o| o == &q) {
            out.push(q);
        }
    }
    out
}

/// Row-major lexicographic minimum of the orbit.
pub fn canonical_form(p: &Behavior<Q>, g: &[Relabeling]) -> Behavior<Q> {
    let mut best: Option<(Vec<Q>, Behavior<Q>)> = None;
    for r in g {
        let q = r.apply(p);
        let key = q.flat();
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, q));
        }
    }
    best.unwrap().1
}

/// |orbit(rep) ∩ vertices|: class size of `rep` inside a model.
pub fn class_size(rep: &Behavior<Q>, vertices: &[Behavior<Q>], g: &[Relabeling]) -> usize {
    let orb = orbit(rep, g);
    let set: BTreeSet<Vec<Q>> = vertices.iter().map(|v| v.flat()).collect();
    orb.iter().filter(|o| set.contains(&o.flat())).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip() {
        for c in 0..128u8 {
            assert_eq!(Relabeling::from_code(c).code(), c);
        }
    }

    #[test]
    fn identity_and_inverse() {
        let id = Relabeling::identity();
        let p = probe_behavior();
        assert_eq!(id.apply(&p), p);
        for r in group(true) {
            assert_eq!(r.compose(&r.inverse()), id);
        }
    }
}
