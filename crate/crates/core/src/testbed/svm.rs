use std::sync::Arc;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gaussian_vector, rng_stream, streams};
use crate::error::{invalid, Result};
use crate::problem::{norm, CompositeProblem, CompositeTerm, FeasibleSet, Point, SmoothOracle};

pub const DEFAULT_HOLDOUT: usize = 1000;

/// Fraction of nonzero features per sample.
const DENSITY: f64 = 0.05;

/// `max_t |d²/dt² tanh(t)| = 4/(3√3)`.
const TANH_CURVATURE: f64 = 0.769_800_358_919_501;

/// Sigmoid-loss classifier
/// `f(x) = (1/m) Σ [1 − tanh(v_i⟨x,u_i⟩)] + λ/2 ‖x‖²` over `B(0, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmInstance {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub lambda: f64,
    pub radius: f64,
    /// Rows are samples.
    pub features: Array2<f64>,
    pub labels: Vec<f64>,
    pub x_bar: Point,
    pub holdout_features: Array2<f64>,
    pub holdout_labels: Vec<f64>,
    /// `(1/m) Σ‖u_i‖² · 4/(3√3) + λ`.
    pub lipschitz: f64,
}

fn sign(t: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn draw_samples(rng: &mut impl Rng, count: usize, n: usize, x_bar: &Point) -> (Array2<f64>, Vec<f64>) {
    let nnz = ((DENSITY * n as f64).ceil() as usize).clamp(1, n);
    let mut u = Array2::zeros((count, n));
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let idx = sample(rng, n, nnz);
        for j in idx.iter() {
            u[[i, j]] = rng.random::<f64>();
        }
        labels.push(sign(u.row(i).dot(x_bar)));
    }
    (u, labels)
}

pub fn gen_svm_instance(m: usize, n: usize, seed: u64) -> Result<SvmInstance> {
    gen_svm_instance_with_holdout(m, n, seed, DEFAULT_HOLDOUT)
}

pub fn gen_svm_instance_with_holdout(m: usize, n: usize, seed: u64, holdout: usize) -> Result<SvmInstance> {
    if m == 0 || n == 0 {
        return Err(invalid("instance sizes must be positive"));
    }
    let (lambda, radius) = (0.01, 50.0);
    let mut x_bar = gaussian_vector(&mut rng_stream(seed, streams::TRUTH), n);
    let nx = norm(&x_bar);
    if nx > 0.0 {
        x_bar *= 0.5 * radius / nx;
    }
    let (features, labels) = draw_samples(&mut rng_stream(seed, streams::MATRIX), m, n, &x_bar);
    let (holdout_features, holdout_labels) =
        draw_samples(&mut rng_stream(seed, streams::HOLDOUT), holdout, n, &x_bar);
    let mean_sq = features.rows().into_iter().map(|r| r.dot(&r)).sum::<f64>() / m as f64;
    Ok(SvmInstance {
        m,
        n,
        seed,
        lambda,
        radius,
        features,
        labels,
        x_bar,
        holdout_features,
        holdout_labels,
        lipschitz: mean_sq * TANH_CURVATURE + lambda,
    })
}

impl SvmInstance {
    pub fn oracle(&self) -> SvmOracle {
        SvmOracle {
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
        let margins = self.features.dot(x);
        let inv_m = 1.0 / self.m as f64;
        let mut loss = 0.0;
        let mut coef = Point::zeros(self.m);
        for i in 0..self.m {
            let v = self.labels[i];
            let th = (v * margins[i]).tanh();
            loss += 1.0 - th;
            coef[i] = -inv_m * v * (1.0 - th * th);
        }
        let mut g = self.features.t().dot(&coef);
        g.scaled_add(self.lambda, x);
        (inv_m * loss + 0.5 * self.lambda * x.dot(x), g)
    }

    /// Fraction of holdout samples with `v ≠ sign(⟨x,u⟩)`, `sign(0) = +1`.
    pub fn classification_error(&self, x: &Point) -> f64 {
        let k = self.holdout_labels.len();
        if k == 0 {
            return 0.0;
        }
        let margins = self.holdout_features.dot(x);
        let wrong = margins
            .iter()
            .zip(&self.holdout_labels)
            .filter(|(t, v)| sign(**t) != **v)
            .count();
        wrong as f64 / k as f64
    }
}

#[derive(Debug, Clone)]
pub struct SvmOracle {
    inst: Arc<SvmInstance>,
}

impl SmoothOracle for SvmOracle {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::finite_diff_gradient;
    use crate::testbed::random_point_in_ball;

    #[test]
    fn curvature_constant() {
        assert!((TANH_CURVATURE - 4.0 / (3.0 * 3f64.sqrt())).abs() < 1e-15);
        // sup of |tanh''| = |2 tanh sech²| on a fine grid
        let sup = (0..200_000)
            .map(|i| {
                let t = i as f64 * 1e-5;
                let th = t.tanh();
                (2.0 * th * (1.0 - th * th)).abs()
            })
            .fold(0.0, f64::max);
        assert!(sup <= TANH_CURVATURE && TANH_CURVATURE - sup < 1e-9);
    }

    #[test]
    fn sparsity_and_labels() {
        let inst = gen_svm_instance_with_holdout(40, 60, 2, 100).unwrap();
        for row in inst.features.rows() {
            assert_eq!(row.iter().filter(|v| **v != 0.0).count(), 3);
            assert!(row.iter().all(|v| (0.0..1.0).contains(v)));
        }
        assert!((norm(&inst.x_bar) - 25.0).abs() < 1e-12);
        assert_eq!(inst.classification_error(&inst.x_bar), 0.0);
        assert_eq!(inst.classification_error(&(-&inst.x_bar)), 1.0);
        let x = random_point_in_ball(&Point::zeros(60), 50.0, 4);
        let er = inst.classification_error(&x);
        assert!((0.0..=1.0).contains(&er));
    }

    #[test]
    fn value_at_origin() {
        let inst = gen_svm_instance_with_holdout(30, 40, 1, 10).unwrap();
        let (f, g) = inst.objective_gradient(&Point::zeros(40));
        assert_eq!(f, 1.0);
        let mut expect = Point::zeros(40);
        for (row, v) in inst.features.rows().into_iter().zip(&inst.labels) {
            expect.scaled_add(-v / 30.0, &row);
        }
        assert!(norm(&(&g - &expect)) < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let inst = gen_svm_instance_with_holdout(50, 40, 7, 10).unwrap();
        let o = inst.oracle();
        for s in 0..10 {
            // moderate radius keeps tanh out of saturation
            let x = random_point_in_ball(&Point::zeros(40), 2.0, 300 + s);
            let (f, g) = o.eval(&x);
            assert!(f >= 0.5 * inst.lambda * x.dot(&x));
            let fd = finite_diff_gradient(&o, &x, 1e-6);
            let rel = norm(&(&g - &fd)) / norm(&g).max(1e-12);
            assert!(rel < 1e-5, "rel={rel}");
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            gen_svm_instance_with_holdout(10, 40, 3, 5).unwrap(),
            gen_svm_instance_with_holdout(10, 40, 3, 5).unwrap()
        );
    }
}
