//! Localizers for the bundle-level methods: a base set intersected with
//! linear cuts, together with exact projection and certified linear lower
//! bounds over it.

use std::collections::VecDeque;

use ndarray::Zip;

use super::polyhedron::{project_polyhedron, Halfspace, PolyProjection};
use crate::error::{check_dim, invalid, Error, Result};
use crate::problem::{dist, norm, FeasibleSet, Point};

/// Default number of retained level cuts.
pub const DEFAULT_MAX_CUTS: usize = 10;

/// Base set plus cuts: one obtuse-angle ("bar") cut from the latest prox
/// center and at most `max_cuts` level cuts, oldest evicted first.
#[derive(Debug, Clone, PartialEq)]
pub struct Localizer {
    pub base: FeasibleSet,
    bar: Option<Halfspace>,
    level: VecDeque<Halfspace>,
    max_cuts: usize,
}

impl Localizer {
    pub fn new(base: FeasibleSet, max_cuts: usize) -> Result<Self> {
        if max_cuts == 0 {
            return Err(invalid("localizer must retain at least one cut"));
        }
        Ok(Self {
            base,
            bar: None,
            level: VecDeque::new(),
            max_cuts,
        })
    }

    pub fn max_cuts(&self) -> usize {
        self.max_cuts
    }

    pub fn bar(&self) -> Option<&Halfspace> {
        self.bar.as_ref()
    }

    pub fn level_cuts(&self) -> impl Iterator<Item = &Halfspace> {
        self.level.iter()
    }

    /// All cuts, bar cut first.
    pub fn cuts(&self) -> Vec<Halfspace> {
        self.bar.iter().chain(self.level.iter()).cloned().collect()
    }

    pub fn num_cuts(&self) -> usize {
        self.level.len() + usize::from(self.bar.is_some())
    }

    /// Replaces the bar cut.
    pub fn with_bar(&self, bar: Option<Halfspace>) -> Self {
        let mut out = self.clone();
        out.bar = bar;
        out
    }

    /// Drops every cut, keeping the base.
    pub fn reset(&self) -> Self {
        Self {
            base: self.base.clone(),
            bar: None,
            level: VecDeque::new(),
            max_cuts: self.max_cuts,
        }
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.base.contains(x, tol)
            && self
                .bar
                .iter()
                .chain(self.level.iter())
                .all(|c| c.contains(x, tol * (1.0 + norm(&c.normal))))
    }
}

/// Adds a level cut, evicting the oldest level cut beyond `max_cuts`. The
/// bar cut is never evicted.
pub fn append_cut(loc: &Localizer, cut: Halfspace) -> Localizer {
    let mut out = loc.clone();
    if out.level.len() == out.max_cuts {
        out.level.pop_front();
    }
    out.level.push_back(cut);
    out
}

/// Outcome of [`project_localizer`].
#[derive(Debug, Clone, PartialEq)]
pub enum LocalizerProjection {
    Feasible(Point),
    Empty,
}

impl LocalizerProjection {
    pub fn point(&self) -> Option<&Point> {
        match self {
            Self::Feasible(p) => Some(p),
            Self::Empty => None,
        }
    }
}

/// Euclidean projection of `x0` onto the localizer.
///
/// With a ball base `B(c, R)` the ball constraint is dualized with a scalar
/// multiplier `ρ`: the minimizer for fixed `ρ` is the polyhedral projection of
/// `(x0 + ρc)/(1 + ρ)`, and its distance to `c` is nonincreasing in `ρ`, so the
/// multiplier is found by bisection on `t = ρ/(1+ρ) ∈ [0,1]`. The set is empty
/// exactly when the polyhedron is empty or its projection of `c` lies outside
/// the ball.
pub fn project_localizer(x0: &Point, loc: &Localizer) -> Result<LocalizerProjection> {
    let cuts = loc.cuts();
    match &loc.base {
        FeasibleSet::WholeSpace => Ok(match project_polyhedron(x0, &cuts)? {
            PolyProjection::Feasible(p) => LocalizerProjection::Feasible(p),
            PolyProjection::Empty { .. } => LocalizerProjection::Empty,
        }),
        FeasibleSet::Ball { center, radius } => {
            check_dim(center.len(), x0.len())?;
            project_ball_polyhedron(x0, center, *radius, &cuts)
        }
        FeasibleSet::Box { .. } => Err(Error::Unsupported(
            "localizer projection supports ball and whole-space bases".into(),
        )),
    }
}

fn project_ball_polyhedron(
    x0: &Point,
    center: &Point,
    radius: f64,
    cuts: &[Halfspace],
) -> Result<LocalizerProjection> {
    // cheap disjointness test per cut: min over the ball of a·x exceeds b
    for c in cuts {
        if c.normal.dot(center) - radius * norm(&c.normal) > c.offset {
            return Ok(LocalizerProjection::Empty);
        }
    }
    let proj = |z: &Point| -> Result<Option<Point>> {
        Ok(match project_polyhedron(z, cuts)? {
            PolyProjection::Feasible(p) => Some(p),
            PolyProjection::Empty { .. } => None,
        })
    };
    let Some(p0) = proj(x0)? else {
        return Ok(LocalizerProjection::Empty);
    };
    if dist(&p0, center) <= radius {
        return Ok(LocalizerProjection::Feasible(p0));
    }
    let Some(pc) = proj(center)? else {
        return Ok(LocalizerProjection::Empty);
    };
    let dc = dist(&pc, center);
    if dc > radius * (1.0 + 1e-12) {
        return Ok(LocalizerProjection::Empty);
    }
    let blend = |t: f64| -> Point {
        let mut z = x0 * (1.0 - t);
        z.scaled_add(t, center);
        z
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = pc;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let Some(p) = proj(&blend(mid))? else {
            return Err(Error::Numerical(
                "polyhedron became empty during ball bisection".into(),
            ));
        };
        let d = dist(&p, center);
        if d <= radius {
            hi = mid;
            let done = radius - d <= 1e-13 * radius;
            best = p;
            if done {
                break;
            }
        } else {
            lo = mid;
        }
    }
    Ok(LocalizerProjection::Feasible(best))
}

/// Budget of dual-ascent iterations in [`min_linear_lower_bound`].
pub const DUAL_ASCENT_BUDGET: usize = 200;

/// Certified lower bound on `min { ⟨c,x⟩ + offset : x ∈ loc }`.
///
/// Every cut multiplier `μ ≥ 0` gives the valid bound
/// `offset − bᵀμ + min_{x ∈ base} ⟨c + Aᵀμ, x⟩`, where the inner minimum has a
/// closed form for ball and box bases. Projected gradient ascent on `μ` with
/// an adaptive step runs for a fixed budget and the best bound is returned.
/// A whole-space base yields `-inf`.
pub fn min_linear_lower_bound(c: &Point, offset: f64, loc: &Localizer) -> Result<f64> {
    let cuts = loc.cuts();
    for h in &cuts {
        check_dim(c.len(), h.normal.len())?;
    }
    if matches!(loc.base, FeasibleSet::WholeSpace) {
        return Ok(f64::NEG_INFINITY);
    }
    // value and a supergradient (A x*(μ) − b) of the dual function
    let dual = |mu: &[f64]| -> (f64, Vec<f64>) {
        let mut v = c.clone();
        let mut lin = offset;
        for (h, &m) in cuts.iter().zip(mu) {
            if m != 0.0 {
                v.scaled_add(m, &h.normal);
                lin -= m * h.offset;
            }
        }
        let (inner, xstar) = base_linear_min(&loc.base, &v);
        let grad = cuts.iter().map(|h| h.normal.dot(&xstar) - h.offset).collect();
        (lin + inner, grad)
    };

    let mut mu = vec![0.0; cuts.len()];
    let (mut val, mut grad) = dual(&mu);
    if cuts.is_empty() {
        return Ok(val);
    }
    let amax = cuts.iter().map(|h| h.normal.dot(&h.normal)).fold(0.0, f64::max);
    let width = match &loc.base {
        FeasibleSet::Ball { radius, .. } => *radius,
        FeasibleSet::Box { lower, upper } => norm(&(upper - lower)).max(f64::MIN_POSITIVE),
        FeasibleSet::WholeSpace => unreachable!(),
    };
    let mut step = norm(c).max(1e-12) / (amax * width.max(1e-12));
    let mut best = val;
    for _ in 0..DUAL_ASCENT_BUDGET {
        let trial: Vec<f64> = mu
            .iter()
            .zip(&grad)
            .map(|(m, g)| (m + step * g).max(0.0))
            .collect();
        let (tv, tg) = dual(&trial);
        if tv >= val {
            mu = trial;
            val = tv;
            grad = tg;
            best = best.max(val);
            step *= 2.0;
        } else {
            step *= 0.5;
        }
        if step == 0.0 || !step.is_finite() {
            break;
        }
    }
    Ok(best)
}

/// `min_{x ∈ base} ⟨v,x⟩` and a minimizer.
fn base_linear_min(base: &FeasibleSet, v: &Point) -> (f64, Point) {
    match base {
        FeasibleSet::Ball { center, radius } => {
            let nv = norm(v);
            if nv == 0.0 {
                (0.0, center.clone())
            } else {
                let x = center - &(v * (radius / nv));
                (v.dot(center) - radius * nv, x)
            }
        }
        FeasibleSet::Box { lower, upper } => {
            let mut x = lower.clone();
            Zip::from(&mut x)
                .and(v)
                .and(upper)
                .for_each(|x, &vi, &u| {
                    if vi < 0.0 {
                        *x = u;
                    }
                });
            (v.dot(&x), x)
        }
        FeasibleSet::WholeSpace => (f64::NEG_INFINITY, v.clone()),
    }
}
