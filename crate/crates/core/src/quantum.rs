//! Two-qubit strategies in the X-Z plane, the closed-form optimal strategies,
//! the sum-of-squares check for T_p and a multistart violation search.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::behavior::{BehaviorF, Correlators};
use crate::error::{Error, Result};
use crate::functional::{t_quantum_bound, Functional};
use crate::geometry::Sense;
use crate::optimize::NelderMead;

/// State cos(theta)|00> + sin(theta)|11>, observables cos(a) Z + sin(a) X,
/// mixed with white noise of weight `mu`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QubitStrategy {
    pub theta: f64,
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub mu: f64,
}

impl QubitStrategy {
    pub fn new(theta: f64, a: [f64; 2], b: [f64; 2]) -> Self {
        QubitStrategy { theta, a, b, mu: 0.0 }
    }

    pub fn with_noise(&self, mu: f64) -> Self {
        QubitStrategy { mu, ..self.clone() }
    }

    pub fn correlators(&self) -> Correlators<f64> {
        let v = 1.0 - self.mu;
        let (s2, c2) = (2.0 * self.theta).sin_cos();
        let mut c = Correlators {
            a: [0.0; 4],
            b: [0.0; 4],
            ab: [0.0; 4],
        };
        for x in 0..2 {
            for y in 0..2 {
                let (ax, bx) = (self.a[x], self.b[y]);
                let k = 2 * x + y;
                c.a[k] = v * ax.cos() * c2;
                c.b[k] = v * bx.cos() * c2;
                c.ab[k] = v * (ax.cos() * bx.cos() + ax.sin() * bx.sin() * s2);
            }
        }
        c
    }

    fn from_slice(v: &[f64]) -> Self {
        QubitStrategy::new(v[0], [v[1], v[2]], [v[3], v[4]])
    }

    /// All angles mapped into [-pi, pi].
    pub fn wrapped(&self) -> Self {
        let w = |t: f64| {
            let r = (t + PI).rem_euclid(2.0 * PI) - PI;
            if r < -PI {
                r + 2.0 * PI
            } else {
                r
            }
        };
        QubitStrategy {
            theta: w(self.theta),
            a: self.a.map(w),
            b: self.b.map(w),
            mu: self.mu,
        }
    }
}

pub fn behavior_from_strategy(s: &QubitStrategy) -> BehaviorF {
    s.correlators().to_behavior().expect("four correlator tables")
}

pub fn observable(alpha: f64) -> Matrix2<f64> {
    let (s, c) = alpha.sin_cos();
    Matrix2::new(c, s, s, -c)
}

fn kron(a: &Matrix2<f64>, b: &Matrix2<f64>) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

pub fn density(s: &QubitStrategy) -> Matrix4<f64> {
    let psi = Vector4::new(s.theta.cos(), 0.0, 0.0, s.theta.sin());
    (1.0 - s.mu) * psi * psi.transpose() + s.mu * Matrix4::identity() / 4.0
}

/// p(ab|xy) = Tr[(M_a|x (x) N_b|y) rho] by explicit matrices.
pub fn behavior_by_trace(s: &QubitStrategy) -> BehaviorF {
    let rho = density(s);
    let proj = |alpha: f64, out: usize| {
        let sign = if out == 0 { 1.0 } else { -1.0 };
        (Matrix2::identity() + sign * observable(alpha)) / 2.0
    };
    BehaviorF::from_fn(|x, y, a, b| (kron(&proj(s.a[x], a), &proj(s.b[y], b)) * rho).trace())
}

fn check_prop2_domain(p: f64) -> Result<()> {
    if !(p > 0.4 && p < 1.0) {
        return Err(Error::Domain(format!("p = {p} outside (2/5, 1)")));
    }
    Ok(())
}

/// (theta, phi) of the optimal T_p strategy.
fn prop2_angles(p: f64) -> (f64, f64) {
    let f1 = (p * (5.0 * p - 2.0)).sqrt() / (1.0 - 3.0 * p);
    let g1 = (1.0 - 2.0 * p) / (3.0 * p - 1.0);
    let f2 = -((5.0 * p - 2.0) / (6.0 * p - 2.0)).sqrt();
    let g2 = (p / (6.0 * p - 2.0)).sqrt();
    (0.5 * f1.atan2(g1), f2.atan2(g2))
}

/// A0 = X, A1 = Z, B0 = cos(phi) Z + sin(phi) X, B1 = -cos(phi) Z + sin(phi) X.
pub fn prop2_strategy(p: f64) -> Result<QubitStrategy> {
    check_prop2_domain(p)?;
    let (theta, phi) = prop2_angles(p);
    Ok(QubitStrategy::new(theta, [PI / 2.0, 0.0], [phi, PI - phi]))
}

pub fn prop3_strategy() -> QubitStrategy {
    let c = 2f64.powf(2.0 / 3.0);
    let phi0 = PI + 2.0 * (2.0 / (c + 2.0)).sqrt().asin();
    let phi1 = (2.0 * 2f64.sqrt()).atan();
    let theta = PI - (c / 2.0).atan();
    QubitStrategy::new(theta, [phi0, phi1], [phi0, phi1])
}

/// (16 + 2 * 2^(1/3) - 11 * 2^(2/3)) / 45.
pub fn prop3_constant() -> f64 {
    (16.0 + 2.0 * 2f64.cbrt() - 11.0 * 2f64.powf(2.0 / 3.0)) / 45.0
}

#[derive(Clone, Debug, Serialize)]
pub struct SosReport {
    pub p: f64,
    pub residual_min_eigenvalue: f64,
    /// Largest entry of |beta I - B_p - SOS|.
    pub identity_error: f64,
    /// Tr[(beta I - B_p) rho] at the optimal state.
    pub optimum_gap: f64,
    pub certified_bound: f64,
    pub pass: bool,
}

/// The T_p Bell operator at the optimal observables.
pub fn t_operator(p: f64, s: &QubitStrategy) -> Matrix4<f64> {
    let i2 = Matrix2::identity();
    let c = (1.0 - p) / p;
    let (a0, a1) = (observable(s.a[0]), observable(s.a[1]));
    let (b0, b1) = (observable(s.b[0]), observable(s.b[1]));
    ((1.0 - 2.0 * p) / p) * (kron(&i2, &b0) - kron(&i2, &b1))
        + kron(&a0, &b0)
        + kron(&a0, &b1)
        + c * (kron(&a1, &b0) - kron(&a1, &b1))
}

pub fn sos_check(p: f64) -> Result<SosReport> {
    check_prop2_domain(p)?;
    let s = prop2_strategy(p)?;
    let (theta, phi) = prop2_angles(p);
    let i2 = Matrix2::identity();
    let (a0, a1) = (observable(s.a[0]), observable(s.a[1]));
    let (b0, b1) = (observable(s.b[0]), observable(s.b[1]));
    let (s2, c2) = (2.0 * theta).sin_cos();
    let n0 = kron(&a1, &i2) - kron(&i2, &(b0 - b1)) / (2.0 * phi.cos());
    let n1 = kron(&a0, &i2)
        - s2 * kron(&i2, &(b0 + b1)) / (2.0 * phi.sin())
        - c2 * kron(&a0, &(b0 - b1)) / (2.0 * phi.cos());
    let inv_l2 = (1.0 - p) / (3.0 * p - 1.0);
    let l2 = 1.0 / inv_l2;
    let beta = t_quantum_bound(p);
    let residual = Matrix4::identity() * beta - t_operator(p, &s);
    let sos = (phi.sin() / (l2 * s2)) * (n0 * n0 + l2 * n1 * n1);
    let identity_error = (residual - sos).abs().max();
    let eig = SymmetricEigen::new(residual).eigenvalues.min();
    let gap = (residual * density(&s)).trace();
    let tol = 1e-9;
    Ok(SosReport {
        p,
        residual_min_eigenvalue: eig,
        identity_error,
        optimum_gap: gap,
        certified_bound: beta,
        pass: eig >= -tol && identity_error <= tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub best: QubitStrategy,
    pub value: f64,
    pub bound: f64,
    /// Positive when the inequality is violated.
    pub margin: f64,
    pub master_seed: u64,
    pub seeds: usize,
    pub converged: usize,
}

/// Multistart search over (theta, a0, a1, b0, b1) with mu = 0; one ChaCha stream per start.
pub fn optimize_violation(f: &Functional, seeds: usize, master_seed: u64) -> Violation {
    let coeffs = f.coeffs_f64();
    let dir = match f.sense {
        Sense::Le => 1.0,
        Sense::Ge => -1.0,
    };
    let objective = |v: &[f64]| -dir * behavior_from_strategy(&QubitStrategy::from_slice(v)).dot(&coeffs);
    let nm = NelderMead::default();
    let runs: Vec<_> = (0..seeds.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(i as u64);
            let x0: Vec<f64> = (0..5).map(|_| rng.gen_range(-PI..PI)).collect();
            nm.minimize(objective, &x0)
        })
        .collect();
    let converged = runs.iter().filter(|m| m.converged).count();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");
    let value = -dir * best.value;
    let bound = crate::scalar::Scalar::to_f64(&f.bound);
    Violation {
        best: QubitStrategy::from_slice(&best.x).wrapped(),
        value,
        bound,
        margin: dir * (value - bound),
        master_seed,
        seeds: seeds.max(1),
        converged,
    }
}
