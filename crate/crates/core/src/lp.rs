//! Dense two-phase simplex with Bland's rule, exact over rationals or tolerance-based over floats.
//!
//! Problems are `maximize c.x  s.t.  A x = b, x >= 0`.

use crate::scalar::Scalar;
#[cfg(test)]
use crate::scalar::Q;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    Optimal {
        x: Vec<T>,
        value: T,
    },
    /// `y` with `y^T A <= 0` and `y.b > 0`.
    Infeasible {
        farkas: Vec<T>,
    },
    Unbounded,
}

fn pos<T: Scalar>(v: &T) -> bool {
    v.is_positive() && !v.near_zero()
}

fn neg<T: Scalar>(v: &T) -> bool {
    v.is_negative() && !v.near_zero()
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    n: usize,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = T::one() / self.rows[r][c].clone();
        if !inv.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v = v.clone() * inv.clone();
                }
            }
            self.rhs[r] = self.rhs[r].clone() * inv;
        }
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for &j in &nz {
                let d = f.clone() * prow[j].clone();
                self.rows[i][j] = self.rows[i][j].clone() - d;
            }
            self.rows[i][c] = T::zero();
            if !prhs.is_zero() {
                let d = f * prhs.clone();
                self.rhs[i] = self.rhs[i].clone() - d;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` over the current basis; columns with `allowed[j] == false` never enter.
    /// Returns false when unbounded.
    fn minimize(&mut self, cost: &[T], allowed: &[bool]) -> bool {
        loop {
            // reduced costs d_j = c_j - c_B B^-1 A_j
            let mut enter = None;
            for j in 0..self.n {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j].clone();
                for (i, &bj) in self.basis.iter().enumerate() {
                    if !cost[bj].is_zero() && !self.rows[i][j].is_zero() {
                        d = d - cost[bj].clone() * self.rows[i][j].clone();
                    }
                }
                if neg(&d) {
                    enter = Some(j);
                    break;
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if pos(a) {
                    let ratio = self.rhs[i].clone() / a.clone();
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => {
                            (ratio < *lr && !ratio.near(lr)) || (ratio.near(lr) && self.basis[i] < self.basis[*li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Solves `max c.x, A x = b, x >= 0`.
pub fn solve<T: Scalar>(a: &[Vec<T>], b: &[T], c: &[T]) -> LpOutcome<T> {
    solve_with_dual(a, b, c).0
}

/// As [`solve`], plus the row multipliers `y` of the final basis when optimal.
/// At an optimum `A^T y >= c` up to the scalar's tolerance and `b.y` equals the value.
pub fn solve_with_dual<T: Scalar>(a: &[Vec<T>], b: &[T], c: &[T]) -> (LpOutcome<T>, Option<Vec<T>>) {
    let m = a.len();
    let n = c.len();
    assert!(a.iter().all(|r| r.len() == n) && b.len() == m);
    // Row signs so that the right-hand side is nonnegative.
    let sign: Vec<bool> = b.iter().map(|v| v.is_negative()).collect();
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let mut r: Vec<T> = a[i]
            .iter()
            .map(|v| if sign[i] { -v.clone() } else { v.clone() })
            .collect();
        r.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
        rows.push(r);
        rhs.push(if sign[i] { -b[i].clone() } else { b[i].clone() });
    }
    let total = n + m;
    let mut t = Tableau {
        rows,
        rhs,
        basis: (n..total).collect(),
        n: total,
    };

    // Phase 1.
    let mut cost1 = vec![T::zero(); total];
    for v in cost1.iter_mut().skip(n) {
        *v = T::one();
    }
    let all = vec![true; total];
    t.minimize(&cost1, &all);
    let infeas: T = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bj)| bj >= n)
        .map(|(i, _)| t.rhs[i].clone())
        .fold(T::zero(), |s, v| s + v);
    if pos(&infeas) {
        // y' = c_B B^-1, B^-1 sits in the artificial columns.
        let mut farkas = vec![T::zero(); m];
        for (k, f) in farkas.iter_mut().enumerate() {
            let mut y = T::zero();
            for (i, &bj) in t.basis.iter().enumerate() {
                if bj >= n && !t.rows[i][n + k].is_zero() {
                    y = y + t.rows[i][n + k].clone();
                }
            }
            *f = if sign[k] { -y } else { y };
        }
        return (LpOutcome::Infeasible { farkas }, None);
    }

    // Drive zero-level artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !t.rows[i][j].near_zero()) {
                t.pivot(i, j);
            } else {
                t.rows.remove(i);
                t.rhs.remove(i);
                t.basis.remove(i);
                continue;
            }
        }
        i += 1;
    }

    // Phase 2.
    let mut cost2: Vec<T> = c.iter().map(|v| -v.clone()).collect();
    cost2.extend((0..m).map(|_| T::zero()));
    let allowed: Vec<bool> = (0..total).map(|j| j < n).collect();
    if !t.minimize(&cost2, &allowed) {
        return (LpOutcome::Unbounded, None);
    }
    let mut x = vec![T::zero(); n];
    for (i, &bj) in t.basis.iter().enumerate() {
        if bj < n {
            x[bj] = t.rhs[i].clone();
        }
    }
    let value = x
        .iter()
        .zip(c)
        .fold(T::zero(), |s, (xi, ci)| s + xi.clone() * ci.clone());
    // every tableau row is a combination of the original rows with weights in the artificial columns
    let y: Vec<T> = (0..m)
        .map(|k| {
            let mut v = T::zero();
            for (i, &bj) in t.basis.iter().enumerate() {
                if bj < n && !c[bj].is_zero() && !t.rows[i][n + k].is_zero() {
                    v = v + c[bj].clone() * t.rows[i][n + k].clone();
                }
            }
            if sign[k] {
                -v
            } else {
                v
            }
        })
        .collect();
    (LpOutcome::Optimal { x, value }, Some(y))
}

/// Feasibility of `A x = b, x >= 0`.
pub fn feasible<T: Scalar>(a: &[Vec<T>], b: &[T]) -> LpOutcome<T> {
    let n = a.first().map_or(0, |r| r.len());
    solve(a, b, &vec![T::zero(); n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};
    use num_traits::Zero;

    #[test]
    fn small_max() {
        // max x + y, x + 2y + s1 = 4, 3x + y + s2 = 6
        let a = vec![vec![qi(1), qi(2), qi(1), qi(0)], vec![qi(3), qi(1), qi(0), qi(1)]];
        let b = vec![qi(4), qi(6)];
        let c = vec![qi(1), qi(1), qi(0), qi(0)];
        match solve(&a, &b, &c) {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, q(14, 5));
                assert_eq!(x[0], q(8, 5));
                assert_eq!(x[1], q(6, 5));
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn dual_certifies_optimum() {
        let a = vec![vec![qi(1), qi(2), qi(1), qi(0)], vec![qi(3), qi(1), qi(0), qi(1)]];
        let b = vec![qi(4), qi(-6)];
        let a2 = vec![a[0].clone(), a[1].iter().map(|v| -v).collect::<Vec<Q>>()];
        let c = vec![qi(1), qi(1), qi(0), qi(0)];
        let (out, y) = solve_with_dual(&a2, &b, &c);
        let y = y.unwrap();
        let LpOutcome::Optimal { value, .. } = out else {
            panic!()
        };
        for j in 0..4 {
            let s: Q = (0..2).map(|i| &y[i] * &a2[i][j]).sum();
            assert!(s >= c[j]);
        }
        let by: Q = (0..2).map(|i| &y[i] * &b[i]).sum();
        assert_eq!(by, value);
    }

    #[test]
    fn infeasible_certificate() {
        // x + y = 1 and x + y = 2
        let a = vec![vec![qi(1), qi(1)], vec![qi(1), qi(1)]];
        let b = vec![qi(1), qi(2)];
        match feasible(&a, &b) {
            LpOutcome::Infeasible { farkas } => {
                for j in 0..2 {
                    let s: Q = (0..2).map(|i| &farkas[i] * &a[i][j]).sum();
                    assert!(s <= Q::zero());
                }
                let s: Q = (0..2).map(|i| &farkas[i] * &b[i]).sum();
                assert!(s > Q::zero());
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn unbounded_and_negative_rhs() {
        let a = vec![vec![qi(1), qi(-1)]];
        assert_eq!(solve(&a, &[qi(-1)], &[qi(0), qi(1)]), LpOutcome::Unbounded);
        let af = vec![vec![1.0, -1.0]];
        assert_eq!(solve(&af, &[-1.0], &[0.0, 1.0]), LpOutcome::Unbounded);
        match solve(&a, &[qi(-1)], &[qi(-1), qi(-1)]) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, qi(-1)),
            o => panic!("{o:?}"),
        }
    }
}
