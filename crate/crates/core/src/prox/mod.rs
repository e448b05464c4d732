//! Proximal subproblems and projections.
//!
//! [`prox_step`] and [`scaled_prox_step`] solve
//! `min_u ⟨g,u⟩ + (1/2τ)‖u − c‖²_G + X(u)` over the feasible set in closed form
//! for the supported combinations. Polyhedral and localizer projections live
//! in [`polyhedron`] and [`localizer`].

pub mod localizer;
pub mod polyhedron;

use std::collections::VecDeque;

use ndarray::Zip;

pub use localizer::{append_cut, min_linear_lower_bound, project_localizer, Localizer};
pub use polyhedron::{project_polyhedron, Halfspace, PolyProjection};

use crate::error::{check_dim, invalid, Error, Result};
use crate::problem::{project_ball, CompositeTerm, FeasibleSet, Point};

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Exact minimizer of `⟨g,u⟩ + (1/2τ)‖u − center‖² + X(u)` over `set`.
///
/// Supported: whole-space or box with any composite term, ball with the zero
/// term. Ball plus l1 has no closed form and is rejected.
pub fn prox_step(
    g: &Point,
    center: &Point,
    tau: f64,
    composite: &CompositeTerm,
    set: &FeasibleSet,
) -> Result<Point> {
    check_dim(center.len(), g.len())?;
    if !(tau > 0.0) {
        return Err(invalid(format!("prox stepsize must be positive, got {tau}")));
    }
    let mut u = center - &(g * tau);
    match (set, composite.is_zero()) {
        (FeasibleSet::WholeSpace, true) => {}
        (FeasibleSet::Ball { center: c, radius }, true) => u = project_ball(&u, c, *radius),
        (FeasibleSet::Box { lower, upper }, true) => {
            Zip::from(&mut u)
                .and(lower)
                .and(upper)
                .for_each(|v, &l, &h| *v = v.clamp(l, h));
        }
        (FeasibleSet::WholeSpace, false) => {
            let t = tau * l1_weight(composite);
            u.mapv_inplace(|v| soft_threshold(v, t));
        }
        (FeasibleSet::Box { lower, upper }, false) => {
            let t = tau * l1_weight(composite);
            Zip::from(&mut u)
                .and(lower)
                .and(upper)
                .for_each(|v, &l, &h| *v = soft_threshold(*v, t).clamp(l, h));
        }
        (FeasibleSet::Ball { .. }, false) => {
            return Err(Error::Unsupported(
                "prox of an l1 term over a ball has no closed form".into(),
            ))
        }
    }
    Ok(u)
}

fn l1_weight(c: &CompositeTerm) -> f64 {
    match *c {
        CompositeTerm::Zero => 0.0,
        CompositeTerm::WeightedL1(w) => w,
    }
}

/// Limited-memory BFGS approximation of the inverse scaling `G⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsMemory {
    pairs: VecDeque<(Point, Point)>,
    memory: usize,
    sigma: f64,
}

impl LbfgsMemory {
    pub fn new(memory: usize, sigma: f64) -> Result<Self> {
        if memory == 0 {
            return Err(invalid("quasi-Newton memory must be >= 1"));
        }
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(invalid(format!("sigma must lie in (0,1), got {sigma}")));
        }
        Ok(Self {
            pairs: VecDeque::with_capacity(memory),
            memory,
            sigma,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Stores `(s, y)` when the curvature `⟨s,y⟩ ≥ σ‖s‖²`; returns whether
    /// the pair was kept. The oldest pair is evicted beyond `memory`.
    pub fn push(&mut self, s: Point, y: Point) -> bool {
        let sy = s.dot(&y);
        if !(sy >= self.sigma * s.dot(&s)) || sy <= 0.0 {
            return false;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y));
        true
    }

    /// Initial inverse scaling `γ = ⟨s,y⟩/⟨y,y⟩` of the newest pair, capped at `1/σ`.
    fn initial_scale(&self) -> f64 {
        match self.pairs.back() {
            Some((s, y)) => (s.dot(y) / y.dot(y)).min(1.0 / self.sigma),
            None => 1.0,
        }
    }

    /// Two-loop recursion: returns `H g` with `H ≈ G⁻¹`.
    pub fn apply_inverse(&self, g: &Point) -> Point {
        let mut q = g.clone();
        let mut coeffs = Vec::with_capacity(self.pairs.len());
        for (s, y) in self.pairs.iter().rev() {
            let rho = 1.0 / s.dot(y);
            let a = rho * s.dot(&q);
            q.scaled_add(-a, y);
            coeffs.push((rho, a));
        }
        q *= self.initial_scale();
        for ((s, y), (rho, a)) in self.pairs.iter().zip(coeffs.into_iter().rev()) {
            let b = rho * y.dot(&q);
            q.scaled_add(a - b, s);
        }
        q
    }
}

/// The scaling matrix `G` of the descent subproblem.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalingMatrix {
    Identity,
    /// `diag(d)` with every `d_i ≥ σ`.
    Diagonal(Point),
    /// Quasi-Newton scaling; only legal with the whole space and `X ≡ 0`.
    LimitedMemory(LbfgsMemory),
}

impl ScalingMatrix {
    pub fn diagonal(d: Point, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(invalid(format!("sigma must lie in (0,1), got {sigma}")));
        }
        if d.iter().any(|&v| !(v >= sigma) || !v.is_finite()) {
            return Err(invalid("diagonal scaling entries must be finite and >= sigma"));
        }
        Ok(Self::Diagonal(d))
    }
}

/// Exact minimizer of `⟨g,u⟩ + (1/2β)‖u − center‖²_G + X(u)` over `set`.
pub fn scaled_prox_step(
    g: &Point,
    center: &Point,
    beta: f64,
    scaling: &ScalingMatrix,
    composite: &CompositeTerm,
    set: &FeasibleSet,
) -> Result<Point> {
    match scaling {
        ScalingMatrix::Identity => prox_step(g, center, beta, composite, set),
        ScalingMatrix::Diagonal(d) => {
            check_dim(center.len(), g.len())?;
            check_dim(center.len(), d.len())?;
            if !(beta > 0.0) {
                return Err(invalid(format!("prox stepsize must be positive, got {beta}")));
            }
            let w = l1_weight(composite);
            let mut u = Point::zeros(center.len());
            match set {
                FeasibleSet::WholeSpace => {
                    Zip::from(&mut u).and(center).and(g).and(d).for_each(|u, &c, &g, &d| {
                        *u = soft_threshold(c - beta * g / d, beta * w / d);
                    });
                }
                FeasibleSet::Box { lower, upper } => {
                    Zip::from(&mut u).and(center).and(g).and(d).for_each(|u, &c, &g, &d| {
                        *u = soft_threshold(c - beta * g / d, beta * w / d);
                    });
                    Zip::from(&mut u)
                        .and(lower)
                        .and(upper)
                        .for_each(|v, &l, &h| *v = v.clamp(l, h));
                }
                FeasibleSet::Ball { .. } => {
                    return Err(Error::Unsupported(
                        "diagonal scaling over a ball is not separable".into(),
                    ))
                }
            }
            Ok(u)
        }
        ScalingMatrix::LimitedMemory(mem) => {
            if !matches!(set, FeasibleSet::WholeSpace) || !composite.is_zero() {
                return Err(Error::Unsupported(
                    "quasi-Newton scaling requires the whole space and a zero composite term"
                        .into(),
                ));
            }
            check_dim(center.len(), g.len())?;
            if !(beta > 0.0) {
                return Err(invalid(format!("prox stepsize must be positive, got {beta}")));
            }
            Ok(center - &(mem.apply_inverse(g) * beta))
        }
    }
}
