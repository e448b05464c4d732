use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gaussian_matrix, gaussian_vector, rng_stream, streams};
use crate::error::{invalid, Result};
use crate::problem::{norm, CompositeProblem, CompositeTerm, FeasibleSet, Point, SmoothOracle};

/// `f(x) = ½ (x − x*)ᵀ Q (x − x*)` with `λ_max(Q) = L` exactly, minimum value 0
/// at `x*`, and `x*` strictly inside `B(0, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticInstance {
    pub n: usize,
    pub seed: u64,
    pub q: Array2<f64>,
    pub x_star: Point,
    pub eigenvalues: Point,
    pub lipschitz: f64,
    pub radius: f64,
}

/// Random convex quadratic with spectrum in `[0.01 L, L]`, the top
/// eigenvalue being exactly `L`.
pub fn gen_convex_quadratic(n: usize, lipschitz: f64, radius: f64, seed: u64) -> Result<QuadraticInstance> {
    if n == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if !(lipschitz > 0.0) || !(radius > 0.0) {
        return Err(invalid("lipschitz constant and radius must be positive"));
    }
    let g = gaussian_matrix(&mut rng_stream(seed, streams::MATRIX), n, n);
    let dense = DMatrix::from_fn(n, n, |i, j| g[[i, j]]);
    let v = dense.qr().q();

    let mut rng = rng_stream(seed, streams::SPECTRUM);
    let mut eig = Point::zeros(n);
    eig[0] = lipschitz;
    for i in 1..n {
        eig[i] = lipschitz * rng.random_range(0.01..1.0);
    }
    let mut q = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..n).map(|k| v[(i, k)] * eig[k] * v[(j, k)]).sum();
            q[[i, j]] = s;
            q[[j, i]] = s;
        }
    }

    let mut trng = rng_stream(seed, streams::TRUTH);
    let mut dir = gaussian_vector(&mut trng, n);
    dir /= norm(&dir);
    let x_star = dir * (radius * trng.random_range(0.2..0.8));
    Ok(QuadraticInstance {
        n,
        seed,
        q,
        x_star,
        eigenvalues: eig,
        lipschitz,
        radius,
    })
}

impl QuadraticInstance {
    pub fn objective_gradient(&self, x: &Point) -> (f64, Point) {
        let d = x - &self.x_star;
        let qd = self.q.dot(&d);
        (0.5 * d.dot(&qd), qd)
    }

    pub fn oracle(&self) -> QuadraticOracle {
        QuadraticOracle {
            inst: Arc::new(self.clone()),
        }
    }

    pub fn ball_problem(&self) -> CompositeProblem {
        let ball = FeasibleSet::Ball {
            center: Point::zeros(self.n),
            radius: self.radius,
        };
        CompositeProblem::new(Arc::new(self.oracle()), CompositeTerm::Zero, ball)
            .expect("instance dimensions are consistent")
    }

    pub fn unconstrained_problem(&self) -> CompositeProblem {
        CompositeProblem::unconstrained(Arc::new(self.oracle()))
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    inst: Arc<QuadraticInstance>,
}

impl SmoothOracle for QuadraticOracle {
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
