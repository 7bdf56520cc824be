//! Gauss–Hermite quadrature for expectations under a Gaussian law.

use std::f64::consts::PI;

pub const DEFAULT_ORDER: usize = 64;

/// Nodes and weights for `∫ f(x) e^{-x²} dx ≈ Σ wᵢ f(xᵢ)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Rule of the given order. Roots are found by Newton iteration on the
    /// orthonormal Hermite recurrence, seeded with the usual asymptotic
    /// guesses for the largest roots.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Hermite order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (p, dp) = orthonormal_hermite(n, z, pim4);
                derivative = dp;
                let step = p / dp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, dp) = orthonormal_hermite(n, z, pim4);
            if dp.is_finite() && dp != 0.0 {
                derivative = dp;
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (derivative * derivative);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(X)]` for `X ~ N(mean, variance)`.
    pub fn expect_normal(&self, mean: f64, variance: f64, f: impl Fn(f64) -> f64) -> f64 {
        let scale = (2.0 * variance).sqrt();
        let mut acc = crate::sum::CompensatedSum::new();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mean + scale * x));
        }
        acc.value() / PI.sqrt()
    }
}

/// Value of the degree-`n` orthonormal Hermite function at `z` and its
/// derivative, computed from the three-term recurrence.
fn orthonormal_hermite(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}
