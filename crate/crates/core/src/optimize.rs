//! Derivative-free simplex-reflection minimizer.

#[derive(Clone, Debug)]
pub struct NelderMead {
    /// Stop when every vertex is within this distance of the best one.
    pub diameter_tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            diameter_tol: 1e-10,
            max_iter: 20_000,
            initial_step: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(u, v)| u + t * (v - u)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

impl NelderMead {
    pub fn minimize(&self, f: impl Fn(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        let n = x0.len();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), f(x0)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            let v = f(&x);
            simplex.push((x, v));
        }
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = &simplex[0].0;
            if simplex.iter().all(|(x, _)| dist(x, best) < self.diameter_tol) {
                converged = true;
                break;
            }
            iterations += 1;
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / n as f64;
                }
            }
            let worst = simplex[n].clone();
            let xr = lerp(&centroid, &worst.0, -1.0);
            let fr = f(&xr);
            if fr < simplex[0].1 {
                let xe = lerp(&centroid, &worst.0, -2.0);
                let fe = f(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let x = lerp(&centroid, &xr, 0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = lerp(&centroid, &worst.0, 0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            // shrink toward the best vertex
            let b = simplex[0].0.clone();
            for item in simplex.iter_mut().skip(1) {
                let x = lerp(&b, &item.0, 0.5);
                let v = f(&x);
                *item = (x, v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            iterations,
            converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = NelderMead::default().minimize(f, &[-1.2, 1.0]);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{m:?}");
    }
}
