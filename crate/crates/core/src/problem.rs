//! Problem abstraction: a smooth oracle `f`, a simple convex term `X` and a
//! closed convex feasible set. Every solver minimizes `Ψ(x) = f(x) + X(x)`
//! over the set.

use std::cell::Cell;
use std::sync::Arc;

use ndarray::{Array1, Zip};

use crate::error::{check_dim, invalid, Error, Result};

/// Dense point in `R^n`.
pub type Point = Array1<f64>;

/// First-order oracle for the smooth part `f`.
///
/// Implementations must be pure: the same `x` always yields bit-identical
/// output. Value and gradient come from one call since every solver step
/// needs both at the same point.
pub trait SmoothOracle: Send + Sync {
    fn dim(&self) -> usize;

    /// Returns `(f(x), f'(x))`.
    fn eval(&self, x: &Point) -> (f64, Point);

    /// Value only. Defaults to discarding the gradient of [`eval`](Self::eval).
    fn value(&self, x: &Point) -> f64 {
        self.eval(x).0
    }

    /// An upper estimate of the Lipschitz constant of `f'`, when known.
    fn lipschitz_estimate(&self) -> Option<f64> {
        None
    }

    /// Hölder exponent and constant `(ν, H)` of `f'`, when known.
    fn holder(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Oracle backed by a closure, mostly for tests and small examples.
pub struct FnOracle<F> {
    dim: usize,
    f: F,
    lipschitz: Option<f64>,
}

impl<F> FnOracle<F>
where
    F: Fn(&Point) -> (f64, Point) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            lipschitz: None,
        }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }
}

impl<F> SmoothOracle for FnOracle<F>
where
    F: Fn(&Point) -> (f64, Point) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Point) -> (f64, Point) {
        (self.f)(x)
    }

    fn lipschitz_estimate(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// `f(x) = ½‖x‖²`, handy as a reference problem.
#[derive(Debug, Clone, Copy)]
pub struct HalfSquaredNorm {
    pub dim: usize,
}

impl SmoothOracle for HalfSquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Point) -> (f64, Point) {
        (0.5 * x.dot(x), x.clone())
    }

    fn lipschitz_estimate(&self) -> Option<f64> {
        Some(1.0)
    }

    fn holder(&self) -> Option<(f64, f64)> {
        Some((1.0, 1.0))
    }
}

/// The simple convex term `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompositeTerm {
    Zero,
    /// `w‖x‖₁` with `w ≥ 0`.
    WeightedL1(f64),
}

impl CompositeTerm {
    pub fn weighted_l1(weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(invalid(format!("l1 weight must be finite and >= 0, got {weight}")));
        }
        Ok(Self::WeightedL1(weight))
    }

    pub fn value(&self, x: &Point) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::WeightedL1(w) => w * x.iter().map(|v| v.abs()).sum::<f64>(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero) || matches!(self, Self::WeightedL1(w) if *w == 0.0)
    }
}

/// Closed convex feasible set.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    WholeSpace,
    Ball { center: Point, radius: f64 },
    Box { lower: Point, upper: Point },
}

impl FeasibleSet {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn boxed(lower: Point, upper: Point) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(invalid("box requires lower <= upper componentwise"));
        }
        Ok(Self::Box { lower, upper })
    }

    /// Dimension fixed by the set, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::WholeSpace => None,
            Self::Ball { center, .. } => Some(center.len()),
            Self::Box { lower, .. } => Some(lower.len()),
        }
    }

    /// Euclidean projection.
    pub fn project(&self, x: &Point) -> Point {
        match self {
            Self::WholeSpace => x.clone(),
            Self::Ball { center, radius } => project_ball(x, center, *radius),
            Self::Box { lower, upper } => {
                let mut out = x.clone();
                Zip::from(&mut out)
                    .and(lower)
                    .and(upper)
                    .for_each(|v, &l, &u| *v = v.clamp(l, u));
                out
            }
        }
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        match self {
            Self::WholeSpace => true,
            Self::Ball { center, radius } => dist(x, center) <= radius + tol,
            Self::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
        }
    }
}

pub(crate) fn project_ball(x: &Point, center: &Point, radius: f64) -> Point {
    let d = x - center;
    let norm = d.dot(&d).sqrt();
    if norm <= radius {
        x.clone()
    } else {
        center + &(d * (radius / norm))
    }
}

pub(crate) fn dist(a: &Point, b: &Point) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn norm(a: &Point) -> f64 {
    a.dot(a).sqrt()
}

/// `min_{x ∈ set} Ψ(x)` with `Ψ = f + X`.
#[derive(Clone)]
pub struct CompositeProblem {
    pub oracle: Arc<dyn SmoothOracle>,
    pub composite: CompositeTerm,
    pub set: FeasibleSet,
}

impl std::fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("dim", &self.dim())
            .field("composite", &self.composite)
            .field("set", &self.set)
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(
        oracle: Arc<dyn SmoothOracle>,
        composite: CompositeTerm,
        set: FeasibleSet,
    ) -> Result<Self> {
        if let Some(d) = set.dim() {
            check_dim(oracle.dim(), d)?;
        }
        Ok(Self {
            oracle,
            composite,
            set,
        })
    }

    pub fn unconstrained(oracle: Arc<dyn SmoothOracle>) -> Self {
        Self {
            oracle,
            composite: CompositeTerm::Zero,
            set: FeasibleSet::WholeSpace,
        }
    }

    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    pub fn with_set(&self, set: FeasibleSet) -> Result<Self> {
        Self::new(self.oracle.clone(), self.composite, set)
    }
}

/// `Ψ(x) = f(x) + X(x)`.
pub fn eval_objective(problem: &CompositeProblem, x: &Point) -> Result<f64> {
    check_dim(problem.dim(), x.len())?;
    Ok(problem.oracle.value(x) + problem.composite.value(x))
}

/// `f'(x)`; the composite term is never differentiated.
pub fn eval_gradient(problem: &CompositeProblem, x: &Point) -> Result<Point> {
    check_dim(problem.dim(), x.len())?;
    Ok(problem.oracle.eval(x).1)
}

/// Central-difference gradient `(f(x+he_i) − f(x−he_i)) / 2h`.
pub fn finite_diff_gradient(oracle: &dyn SmoothOracle, x: &Point, h: f64) -> Point {
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut probe = x.clone();
    Array1::from_shape_fn(x.len(), |i| {
        let xi = probe[i];
        probe[i] = xi + h;
        let fp = oracle.value(&probe);
        probe[i] = xi - h;
        let fm = oracle.value(&probe);
        probe[i] = xi;
        (fp - fm) / (2.0 * h)
    })
}

/// Value of `Ψ`, value of `f` and gradient `f'` at one point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub psi: f64,
    pub f: f64,
    pub grad: Point,
}

/// Per-run wrapper around a problem that counts oracle calls.
///
/// Not shared across runs; each solver run owns one.
pub struct Evaluator<'a> {
    pub problem: &'a CompositeProblem,
    calls: Cell<u64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a CompositeProblem) -> Self {
        Self {
            problem,
            calls: Cell::new(0),
        }
    }

    pub fn eval(&self, x: &Point) -> Evaluation {
        self.calls.set(self.calls.get() + 1);
        let (f, grad) = self.problem.oracle.eval(x);
        Evaluation {
            psi: f + self.problem.composite.value(x),
            f,
            grad,
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.get()
    }
}

/// The sequences `α_k` and `Γ_k` with `Γ_1 = 1`, `Γ_k = (1 − α_k) Γ_{k−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSequence {
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl GammaSequence {
    /// `Γ_k` for 1-based `k`.
    pub fn gamma(&self, k: usize) -> f64 {
        self.gammas[k - 1]
    }
}

/// Builds `Γ_1..Γ_K` from the first `K` entries of `alphas`.
///
/// Requires `α_1 = 1` and `α_k ∈ (0,1)` for `k ≥ 2`.
pub fn gamma_sequence(alphas: &[f64], k: usize) -> Result<GammaSequence> {
    if k == 0 || alphas.len() < k {
        return Err(invalid(format!(
            "need at least {k} alphas (k >= 1), got {}",
            alphas.len()
        )));
    }
    if alphas[0] != 1.0 {
        return Err(invalid(format!("alpha_1 must equal 1, got {}", alphas[0])));
    }
    let mut gammas = Vec::with_capacity(k);
    gammas.push(1.0);
    for (i, &a) in alphas.iter().enumerate().take(k).skip(1) {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_{} must lie in (0,1), got {a}",
                i + 1
            )));
        }
        let prev = gammas[i - 1];
        gammas.push((1.0 - a) * prev);
    }
    Ok(GammaSequence {
        alphas: alphas[..k].to_vec(),
        gammas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn half_sq(n: usize) -> Arc<dyn SmoothOracle> {
        Arc::new(HalfSquaredNorm { dim: n })
    }

    #[test]
    fn objective_examples() {
        let p = CompositeProblem::unconstrained(half_sq(2));
        assert_eq!(eval_objective(&p, &array![3.0, 4.0]).unwrap(), 12.5);

        let p = CompositeProblem::new(
            half_sq(2),
            CompositeTerm::weighted_l1(1.0).unwrap(),
            FeasibleSet::WholeSpace,
        )
        .unwrap();
        assert_eq!(eval_objective(&p, &array![1.0, -1.0]).unwrap(), 3.0);
    }

    #[test]
    fn gradient_example_and_dimension_errors() {
        let p = CompositeProblem::unconstrained(half_sq(2));
        assert_eq!(eval_gradient(&p, &array![3.0, 4.0]).unwrap(), array![3.0, 4.0]);
        assert_eq!(
            eval_objective(&p, &array![1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        );
        assert!(eval_gradient(&p, &array![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn problem_rejects_mismatched_set() {
        let set = FeasibleSet::ball(array![0.0, 0.0, 0.0], 1.0).unwrap();
        assert!(CompositeProblem::new(half_sq(2), CompositeTerm::Zero, set).is_err());
        assert!(FeasibleSet::ball(array![0.0], 0.0).is_err());
        assert!(FeasibleSet::boxed(array![1.0], array![0.0]).is_err());
        assert!(CompositeTerm::weighted_l1(-1.0).is_err());
    }

    #[test]
    fn objective_is_bitwise_deterministic() {
        let oracle: Arc<dyn SmoothOracle> = Arc::new(FnOracle::new(3, |x: &Point| {
            let v = x.iter().map(|t| t.sin() * t.exp()).sum::<f64>();
            (v, x.mapv(|t| t.exp() * (t.sin() + t.cos())))
        }));
        let p = CompositeProblem::new(
            oracle,
            CompositeTerm::WeightedL1(0.3),
            FeasibleSet::WholeSpace,
        )
        .unwrap();
        let x = array![0.1, -2.3, 1.7];
        let a = eval_objective(&p, &x).unwrap();
        let b = eval_objective(&p, &x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn finite_difference_examples() {
        let sq = FnOracle::new(1, |x: &Point| (x[0] * x[0], array![2.0 * x[0]]));
        let g = finite_diff_gradient(&sq, &array![1.0], 1e-5);
        assert!((g[0] - 2.0).abs() < 1e-8);

        let cube = FnOracle::new(1, |x: &Point| (x[0].powi(3), array![3.0 * x[0] * x[0]]));
        let g = finite_diff_gradient(&cube, &array![2.0], 1e-4);
        assert!((g[0] - 12.0).abs() < 1e-6);

        let th = FnOracle::new(1, |x: &Point| (x[0].tanh(), array![1.0 - x[0].tanh().powi(2)]));
        let g = finite_diff_gradient(&th, &array![0.0], 1e-5);
        assert!((g[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gamma_examples() {
        let alphas: Vec<f64> = (1..=10).map(|k| 2.0 / (k as f64 + 1.0)).collect();
        let g = gamma_sequence(&alphas, 3).unwrap();
        let expect = [1.0, 1.0 / 3.0, 1.0 / 6.0];
        for (a, b) in g.gammas.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let g = gamma_sequence(&alphas, 10).unwrap();
        assert!((g.gamma(10) - 2.0 / 110.0).abs() < 1e-15);
        assert_eq!(gamma_sequence(&[1.0, 0.5], 2).unwrap().gamma(1), 1.0);
    }

    #[test]
    fn gamma_rejects_bad_alphas() {
        assert!(gamma_sequence(&[0.5, 0.5], 2).is_err());
        assert!(gamma_sequence(&[1.0, 1.0], 2).is_err());
        assert!(gamma_sequence(&[1.0, 0.0], 2).is_err());
        assert!(gamma_sequence(&[1.0], 2).is_err());
    }

    #[test]
    fn gamma_matches_closed_form_up_to_1000() {
        let alphas: Vec<f64> = (1..=1000).map(|k| 2.0 / (k as f64 + 1.0)).collect();
        let g = gamma_sequence(&alphas, 1000).unwrap();
        for k in 1..=1000 {
            let kf = k as f64;
            let exact = 2.0 / (kf * (kf + 1.0));
            assert!((g.gamma(k) - exact).abs() < 1e-14, "k={k}");
        }
        for w in g.gammas.windows(2).skip(1) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn projections_onto_sets() {
        let ball = FeasibleSet::ball(array![0.0, 0.0], 1.0).unwrap();
        let p = ball.project(&array![3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        let bx = FeasibleSet::boxed(array![-1.0, 0.0], array![1.0, 0.5]).unwrap();
        assert_eq!(bx.project(&array![3.0, -4.0]), array![1.0, 0.0]);
        assert!(bx.contains(&array![0.0, 0.5], 0.0));
    }

    #[test]
    fn evaluator_counts_calls() {
        let p = CompositeProblem::unconstrained(half_sq(2));
        let ev = Evaluator::new(&p);
        let e = ev.eval(&array![1.0, 1.0]);
        ev.eval(&array![0.0, 1.0]);
        assert_eq!(e.psi, 1.0);
        assert_eq!(ev.calls(), 2);
    }
}
