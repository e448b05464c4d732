//! Seeded synthetic instances: SCAD-penalized least squares, a sigmoid-loss
//! linear classifier, and convex quadratics with known optimum.
//!
//! Every generator is a pure function of its size arguments and a `u64`
//! seed. Randomness comes from ChaCha8 with one stream per component, so
//! adding a component never perturbs the others.

mod quadratic;
mod scad;
mod svm;

pub use quadratic::{gen_convex_quadratic, QuadraticInstance};
pub use scad::{gen_scad_instance, scad_penalty, scad_penalty_deriv, ScadInstance};
pub use svm::{gen_svm_instance, gen_svm_instance_with_holdout, SvmInstance, DEFAULT_HOLDOUT};

use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{norm, Point};

/// Stream identifiers. One per random component of an instance.
pub mod streams {
    pub const MATRIX: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const TRUTH: u64 = 3;
    pub const HOLDOUT: u64 = 4;
    pub const START: u64 = 5;
    pub const SPECTRUM: u64 = 6;
}

/// Generator for `stream` under `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn gaussian_vector(rng: &mut impl Rng, n: usize) -> Point {
    Point::from_iter((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

pub(crate) fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
}

/// Point drawn uniformly from the ball `B(center, radius)`.
pub fn random_point_in_ball(center: &Point, radius: f64, seed: u64) -> Point {
    let mut rng = rng_stream(seed, streams::START);
    let n = center.len();
    let mut dir = gaussian_vector(&mut rng, n);
    let nd = norm(&dir);
    if nd > 0.0 {
        dir /= nd;
    }
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / n as f64);
    center + &(dir * r)
}

/// Largest eigenvalue of `MᵀM` by power iteration from a fixed start.
pub fn power_iteration_gram(m: &Array2<f64>, max_iter: usize, tol: f64) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let mut v = Point::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..max_iter {
        let w = m.t().dot(&m.dot(&v));
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / nw;
        if (next - est).abs() <= tol * next.abs() {
            return next.max(nw);
        }
        est = next;
    }
    est
}

/// A serialized instance with a self-describing header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Instance {
    Scad(ScadInstance),
    Svm(SvmInstance),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Container {
    format: String,
    version: u32,
    instance: Instance,
}

const FORMAT: &str = "uniopt-instance";
const VERSION: u32 = 1;

impl Instance {
    pub fn to_json(&self) -> Result<String> {
        let c = Container {
            format: FORMAT.into(),
            version: VERSION,
            instance: self.clone(),
        };
        serde_json::to_string(&c).map_err(|e| Error::Numerical(format!("serialization: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Container = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("malformed instance file: {e}")))?;
        if c.format != FORMAT || c.version != VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported container {} v{}",
                c.format, c.version
            )));
        }
        Ok(c.instance)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = self.to_json().map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::dist;
    use ndarray::array;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: Vec<u64> = (0..4).map(|_| rng_stream(9, 1).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| rng_stream(9, 1).random()).collect();
        assert_eq!(a, b);
        let x: u64 = rng_stream(9, 1).random();
        let y: u64 = rng_stream(9, 2).random();
        assert_ne!(x, y);
    }

    #[test]
    fn ball_sampling_stays_inside() {
        let c = array![1.0, -2.0, 0.5];
        for seed in 0..200 {
            assert!(dist(&random_point_in_ball(&c, 3.0, seed), &c) <= 3.0);
        }
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let m = array![[3.0, 0.0], [0.0, 1.0]];
        assert!((power_iteration_gram(&m, 1000, 1e-14) - 9.0).abs() < 1e-9);
    }

    #[test]
    fn container_round_trip() {
        let inst = Instance::Scad(gen_scad_instance(5, 8, 3).unwrap());
        let back = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);
        let svm = Instance::Svm(gen_svm_instance_with_holdout(4, 20, 3, 10).unwrap());
        assert_eq!(Instance::from_json(&svm.to_json().unwrap()).unwrap(), svm);
        assert!(Instance::from_json("{\"format\":\"x\"}").is_err());
    }
}
