//! Noisy Bell values, noise thresholds, signaling quantum behaviors and a
//! classical guessing-probability LP.

use nalgebra::{Matrix2, Matrix4};
use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::behavior::{BehaviorF, BehaviorQ};
use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::lp::{self, LpOutcome};
use crate::quantum::{behavior_from_strategy, density, observable, QubitStrategy};
use crate::scalar::{fmt_q, Scalar, Q};

/// Alice observables by x, Bob observables by (x~, y); all in the X-Z plane.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignalingQuantumSpec {
    pub theta: f64,
    pub mu: f64,
    pub alice: [f64; 2],
    /// `bob[x~][y]`.
    pub bob: [[f64; 2]; 2],
    /// Probability that Bob's copy of x is correct.
    pub p: f64,
}

fn kron(a: &Matrix2<f64>, b: &Matrix2<f64>) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

fn projector(alpha: f64, out: usize) -> Matrix2<f64> {
    let sign = if out == 0 { 1.0 } else { -1.0 };
    (Matrix2::identity() + sign * observable(alpha)) / 2.0
}

impl SignalingQuantumSpec {
    fn rho(&self) -> Matrix4<f64> {
        density(&QubitStrategy {
            theta: self.theta,
            a: [0.0; 2],
            b: [0.0; 2],
            mu: self.mu,
        })
    }

    /// N~_{b|x,y} = p N_{b|x,y} + (1-p) N_{b|x+1,y}.
    pub fn noisy_bob(&self, b: usize, x: usize, y: usize) -> Matrix2<f64> {
        self.p * projector(self.bob[x][y], b) + (1.0 - self.p) * projector(self.bob[1 - x][y], b)
    }

    /// Bob's reduced state.
    pub fn rho_b(&self) -> Matrix2<f64> {
        let r = self.rho();
        Matrix2::from_fn(|i, j| r[(i, j)] + r[(2 + i, 2 + j)])
    }

    /// (2p - 1) Tr[(N_{0|0,y} - N_{0|1,y}) rho_B].
    pub fn predicted_overlap(&self, y: usize) -> f64 {
        (2.0 * self.p - 1.0) * ((projector(self.bob[0][y], 0) - projector(self.bob[1][y], 0)) * self.rho_b()).trace()
    }
}

pub fn signaling_quantum_behavior(s: &SignalingQuantumSpec) -> BehaviorF {
    let rho = s.rho();
    BehaviorF::from_fn(|x, y, a, b| (kron(&projector(s.alice[x], a), &s.noisy_bob(b, x, y)) * rho).trace())
}

/// CHSH-optimal strategy with maximally anticommuting observables.
pub fn chsh_strategy() -> QubitStrategy {
    use std::f64::consts::PI;
    QubitStrategy::new(PI / 4.0, [0.0, PI / 2.0], [PI / 4.0, -PI / 4.0])
}

pub fn noisy_bell_value(f: &Functional, s: &QubitStrategy, mu: f64) -> f64 {
    f.evaluate_f64(&behavior_from_strategy(&s.with_noise(mu)))
}

#[derive(Clone, Debug, Serialize)]
pub struct Threshold {
    pub mu_star: f64,
    pub closed_form: f64,
    /// False when the noiseless value already respects the bound.
    pub violated: bool,
}

/// Smallest mu with omega(mu) <= beta, by bisection to 1e-10, next to the
/// closed form 1 - (beta - c)/(omega(0) - c) where c is the value on white noise.
pub fn noise_threshold(f: &Functional, s: &QubitStrategy, beta: f64) -> Threshold {
    let w = |mu: f64| noisy_bell_value(f, s, mu);
    let (w0, c) = (w(0.0), w(1.0));
    if w0 <= beta {
        return Threshold {
            mu_star: 0.0,
            closed_form: 0.0,
            violated: false,
        };
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if w(mid) <= beta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Threshold {
        mu_star: hi,
        closed_form: 1.0 - (beta - c) / (w0 - c),
        violated: true,
    }
}

#[derive(Clone, Debug)]
pub struct AttackResult {
    pub feasible: bool,
    pub p_guess: Option<Q>,
    pub min_entropy_bits: Option<f64>,
    /// Vertex weights attaining `p_guess`.
    pub weights: Vec<Q>,
    /// Farkas vector over (normalization, value) rows when infeasible.
    pub certificate: Option<Vec<Q>>,
}

impl AttackResult {
    pub fn to_json(&self) -> Value {
        json!({
            "feasible": self.feasible,
            "p_guess": self.p_guess.as_ref().map(fmt_q),
            "min_entropy_bits": self.min_entropy_bits,
            "certificate": self.certificate.as_ref().map(|c| c.iter().map(fmt_q).collect::<Vec<_>>()),
        })
    }
}

/// Best classical guess of Alice's x = 0 output given f(P) >= omega, over
/// mixtures of the vertex set.
pub fn classical_attack_lp(f: &Functional, omega: &Q, verts: &[BehaviorQ]) -> Result<AttackResult> {
    let mut g = Vec::with_capacity(verts.len());
    let mut fv = Vec::with_capacity(verts.len());
    for (i, v) in verts.iter().enumerate() {
        let m0 = v.alice_marginal(0, 0, 0);
        if m0 != v.alice_marginal(0, 0, 1) {
            return Err(Error::Precondition(format!(
                "vertex {i} has a y-dependent Alice marginal at x = 0"
            )));
        }
        let m1 = Q::one() - &m0;
        g.push(if m0 > m1 { m0 } else { m1 });
        fv.push(f.evaluate(v));
    }
    let n = verts.len();
    // columns: w_0..w_{n-1}, slack s;  rows: sum w = 1, sum w f - s = omega
    let mut a = vec![vec![Q::zero(); n + 1], vec![Q::zero(); n + 1]];
    for i in 0..n {
        a[0][i] = Q::one();
        a[1][i] = fv[i].clone();
    }
    a[1][n] = -Q::one();
    let mut c = g.clone();
    c.push(Q::zero());
    Ok(match lp::solve(&a, &[Q::one(), omega.clone()], &c) {
        LpOutcome::Optimal { x, value } => AttackResult {
            feasible: true,
            min_entropy_bits: Some(-value.to_f64().log2()),
            p_guess: Some(value),
            weights: x[..n].to_vec(),
            certificate: None,
        },
        LpOutcome::Infeasible { farkas } => AttackResult {
            feasible: false,
            p_guess: None,
            min_entropy_bits: None,
            weights: Vec::new(),
            certificate: Some(farkas),
        },
        LpOutcome::Unbounded => return Err(Error::Solver("guessing LP reported unbounded".into())),
    })
}

/// Maximum of `f` over a vertex set.
pub fn vertex_maximum(f: &Functional, verts: &[BehaviorQ]) -> Q {
    verts.iter().map(|v| f.evaluate(v)).max().unwrap_or_else(Q::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::chsh;
    use crate::scalar::qi;

    #[test]
    fn chsh_threshold() {
        let f = chsh().instantiate(&qi(0), &qi(0)).unwrap();
        let t = noise_threshold(&f, &chsh_strategy(), 2.0);
        let want = 1.0 - 1.0 / 2f64.sqrt();
        assert!((t.mu_star - want).abs() < 1e-9);
        assert!((t.closed_form - want).abs() < 1e-12);
    }

    #[test]
    fn unbiased_channel_kills_signaling() {
        let s = SignalingQuantumSpec {
            theta: 0.4,
            mu: 0.0,
            alice: [0.0, 1.0],
            bob: [[0.3, 2.0], [1.1, -0.5]],
            p: 0.5,
        };
        let b = signaling_quantum_behavior(&s);
        assert!(b.is_non_signaling());
    }
}
