use std::sync::Arc;

use ndarray::Array2;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{gaussian_matrix, gaussian_vector, power_iteration_gram, rng_stream, streams};
use crate::error::{invalid, Result};
use crate::problem::{norm, CompositeProblem, CompositeTerm, FeasibleSet, Point, SmoothOracle};

/// Smooth SCAD surrogate `q_λ(β)` for `β ≥ 0`, the integral of
/// [`scad_penalty_deriv`] from 0.
pub fn scad_penalty(beta: f64, a: f64, lambda: f64) -> f64 {
    debug_assert!(beta >= 0.0);
    if beta <= lambda {
        0.5 * beta * beta
    } else if beta <= a * lambda {
        0.5 * lambda * lambda
            + (a * lambda * (beta - lambda) - 0.5 * (beta * beta - lambda * lambda)) / (a - 1.0)
    } else {
        0.5 * a * lambda * lambda
    }
}

/// `q'_λ(β) = β` for `β ≤ λ` and `max(0, aλ − β)/(a − 1)` beyond.
pub fn scad_penalty_deriv(beta: f64, a: f64, lambda: f64) -> f64 {
    if beta <= lambda {
        beta
    } else {
        (a * lambda - beta).max(0.0) / (a - 1.0)
    }
}

/// `f(x) = ½‖Ax − b‖² + m Σ_j q_λ(|x_j|)` over the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScadInstance {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub a_scad: f64,
    pub lambda_scad: f64,
    pub noise: f64,
    pub radius: f64,
    pub matrix: Array2<f64>,
    pub b: Point,
    pub x_true: Point,
    /// Gradient Lipschitz estimate `1.01 ‖AᵀA‖ + m`.
    pub lipschitz: f64,
}

/// Inflation applied to the power-iteration estimate of `‖AᵀA‖`, which
/// approaches the true norm from below.
const NORM_INFLATION: f64 = 1.01;

pub fn gen_scad_instance(m: usize, n: usize, seed: u64) -> Result<ScadInstance> {
    if m == 0 || n == 0 {
        return Err(invalid("instance sizes must be positive"));
    }
    let (a_scad, lambda_scad, noise) = (3.7, 0.01, 0.1);
    let matrix = gaussian_matrix(&mut rng_stream(seed, streams::MATRIX), m, n);

    let mut rng = rng_stream(seed, streams::TRUTH);
    let support = (n / 10).max(1);
    let idx = sample(&mut rng, n, support);
    let vals = gaussian_vector(&mut rng, support);
    let mut x_true = Point::zeros(n);
    for (i, v) in idx.iter().zip(vals.iter()) {
        x_true[i] = *v;
    }
    let nx = norm(&x_true);
    if nx > 0.0 {
        x_true /= nx;
    }

    let xi = gaussian_vector(&mut rng_stream(seed, streams::NOISE), m) * noise;
    let b = matrix.dot(&x_true) + xi;
    let gram = power_iteration_gram(&matrix, 1000, 1e-12);
    Ok(ScadInstance {
        m,
        n,
        seed,
        a_scad,
        lambda_scad,
        noise,
        radius: 1.0,
        matrix,
        b,
        x_true,
        lipschitz: NORM_INFLATION * gram + m as f64,
    })
}

impl ScadInstance {
    pub fn oracle(&self) -> ScadOracle {
        ScadOracle {
            inst: Arc::new(self.clone()),
        }
    }

    pub fn problem(&self) -> CompositeProblem {
        let ball = FeasibleSet::Ball {
            center: Point::zeros(self.n),
            radius: self.radius,
        };
        CompositeProblem::new(Arc::new(self.oracle()), CompositeTerm::Zero, ball)
            .expect("instance dimensions are consistent")
    }

    pub fn objective_gradient(&self, x: &Point) -> (f64, Point) {
        let r = self.matrix.dot(x) - &self.b;
        let w = self.m as f64;
        let (a, l) = (self.a_scad, self.lambda_scad);
        let pen: f64 = x.iter().map(|v| scad_penalty(v.abs(), a, l)).sum();
        let mut g = self.matrix.t().dot(&r);
        for (gi, xi) in g.iter_mut().zip(x.iter()) {
            *gi += w * scad_penalty_deriv(xi.abs(), a, l) * xi.signum();
        }
        (0.5 * r.dot(&r) + w * pen, g)
    }
}

#[derive(Debug, Clone)]
pub struct ScadOracle {
    inst: Arc<ScadInstance>,
}

impl SmoothOracle for ScadOracle {
    fn dim(&self) -> usize {
        self.inst.n
    }

    fn eval(&self, x: &Point) -> (f64, Point) {
        self.inst.objective_gradient(x)
    }

    fn lipschitz_estimate(&self) -> Option<f64> {
        Some(self.inst.lipschitz)
    }
}
