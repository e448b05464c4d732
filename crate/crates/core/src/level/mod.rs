//! Bundle-level solvers. Each phase fixes a level `l` between the best value
//! found and a lower bound, builds cuts from linearizations of `f`, and ends
//! once the gap has shrunk by a constant factor. A projected-gradient
//! descent step taken every iteration keeps the methods convergent when `f`
//! is nonconvex.

mod uapl;
mod ufapl;

pub use uapl::run_uapl;
pub use ufapl::{run_ufapl, unconstrained_wrapper};

use crate::error::{invalid, Error, Result};
use crate::problem::{norm, CompositeProblem, Evaluation, Evaluator, FeasibleSet, Point};
use crate::prox::{localizer::DEFAULT_MAX_CUTS, min_linear_lower_bound, Halfspace, Localizer};
use crate::accel::{line_search_beta, projected_gradient_norm_sq, BetaStep};
use crate::prox::localizer::LocalizerProjection;
use crate::prox::{append_cut, project_localizer, ScalingMatrix};
use crate::trace::{IterRecord, Recorder, RunTrace, StoppingRule, Termination};

#[derive(Debug, Clone, PartialEq)]
pub struct LevelParams {
    /// Level weight: `l = η lb + (1 − η) Ψ̄`.
    pub eta: f64,
    /// Upper-bound reduction threshold of the fast variant.
    pub theta: f64,
    pub max_phases: usize,
    /// Inner iterations after which a phase ends with the lower bound unchanged.
    pub max_inner: usize,
    pub max_cuts: usize,
    pub gamma2: f64,
    pub gamma: f64,
    pub initial_beta: f64,
    pub max_backtracks: usize,
}

impl Default for LevelParams {
    fn default() -> Self {
        Self {
            eta: 0.5,
            theta: 0.5,
            max_phases: 1000,
            max_inner: 200,
            max_cuts: DEFAULT_MAX_CUTS,
            gamma2: 0.5,
            gamma: 0.4,
            initial_beta: 1.0,
            max_backtracks: 60,
        }
    }
}

impl LevelParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.eta) || !unit(self.theta) {
            return Err(invalid("eta and theta must lie in (0,1)"));
        }
        if !unit(self.gamma2) || !unit(self.gamma) {
            return Err(invalid("gamma and gamma2 must lie in (0,1)"));
        }
        if self.max_phases == 0 || self.max_inner == 0 || self.max_cuts == 0 {
            return Err(invalid("max_phases, max_inner and max_cuts must be >= 1"));
        }
        if !(self.initial_beta > 0.0 && self.initial_beta.is_finite()) {
            return Err(invalid("initial beta must be positive and finite"));
        }
        Ok(())
    }

    /// Contraction factor `q = 1 − ½ min{η, 1 − η}` of the gap per phase.
    pub fn q(&self) -> f64 {
        contraction_factor(self.eta)
    }
}

pub fn contraction_factor(eta: f64) -> f64 {
    1.0 - 0.5 * eta.min(1.0 - eta)
}

/// Phases sufficient to bring the gap below `eps` on a convex problem whose
/// gradient is `L`-Lipschitz, over a set of diameter `diameter`:
/// `⌈max{0, log_{1/q}(L D² / (2ε))}⌉`.
pub fn phase_bound(eta: f64, lipschitz: f64, diameter: f64, eps: f64) -> usize {
    let q = contraction_factor(eta);
    let r = lipschitz * diameter * diameter / (2.0 * eps);
    if r <= 1.0 {
        return 0;
    }
    (r.ln() / (1.0 / q).ln()).ceil() as usize
}

/// Why a phase ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseEnd {
    /// The gap contracted by the factor `q`.
    GapContracted,
    /// The level set inside the ball is empty; the level becomes the new lower bound.
    LevelInfeasible,
    /// The upper bound dropped close enough to the level.
    UpperReduced,
    /// Inner iteration cap hit; lower bound kept.
    InnerCap,
    /// The run stopped inside the phase.
    Interrupted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub s: usize,
    pub start_upper: f64,
    pub start_lower: f64,
    pub level: f64,
    pub end_upper: f64,
    pub end_lower: f64,
    pub inner: usize,
    pub end: PhaseEnd,
    /// `Ψ̄_t − lb_t` after each inner iteration.
    pub gaps: Vec<f64>,
}

impl PhaseRecord {
    pub fn start_gap(&self) -> f64 {
        self.start_upper - self.start_lower
    }

    pub fn end_gap(&self) -> f64 {
        self.end_upper - self.end_lower
    }
}

/// Result of a bundle-level run.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRun {
    pub trace: RunTrace,
    pub phases: Vec<PhaseRecord>,
    /// Set by [`unconstrained_wrapper`] when an iterate reached the boundary
    /// of the artificial ball, i.e. the radius estimate was too small.
    pub radius_warning: bool,
    /// Largest distance from the ball center of any accepted or descent
    /// iterate (fast variant only).
    pub max_center_distance: Option<f64>,
}

impl LevelRun {
    /// Lower bound after the last phase.
    pub fn lower_bound(&self) -> Option<f64> {
        self.phases.last().map(|p| p.end_lower)
    }
}

/// `h(y,x) = f(y) + ⟨f'(y), x − y⟩ + 𝒳(x)`.
pub fn linearization(problem: &CompositeProblem, y: &Point, x: &Point) -> Result<f64> {
    crate::error::check_dim(problem.dim(), y.len())?;
    crate::error::check_dim(problem.dim(), x.len())?;
    let (f, g) = problem.oracle.eval(y);
    Ok(f + g.dot(&(x - y)) + problem.composite.value(x))
}

/// `(c, offset)` with `h(y,x) = ⟨c,x⟩ + offset`. Only defined for `𝒳 ≡ 0`.
pub fn cut_form(problem: &CompositeProblem, y: &Point) -> Result<(Point, f64)> {
    require_zero_composite(problem)?;
    crate::error::check_dim(problem.dim(), y.len())?;
    let (f, g) = problem.oracle.eval(y);
    let offset = f - g.dot(y);
    Ok((g, offset))
}

/// `max{prev_lb, min{l, certified min of h(x_md,·) over loc}}`.
pub fn lower_bound_step(
    problem: &CompositeProblem,
    x_md: &Point,
    loc: &Localizer,
    level: f64,
    prev_lb: f64,
) -> Result<f64> {
    let (c, offset) = cut_form(problem, x_md)?;
    bound_from_cut(&c, offset, loc, level, prev_lb)
}

fn bound_from_cut(c: &Point, offset: f64, loc: &Localizer, level: f64, prev_lb: f64) -> Result<f64> {
    let h_min = min_linear_lower_bound(c, offset, loc)?;
    Ok(prev_lb.max(level.min(h_min)))
}

pub(crate) fn require_zero_composite(problem: &CompositeProblem) -> Result<()> {
    if problem.composite.is_zero() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "bundle-level methods need a zero composite term".into(),
        ))
    }
}

pub(crate) fn require_ball(problem: &CompositeProblem) -> Result<(Point, f64)> {
    match &problem.set {
        FeasibleSet::Ball { center, radius } => Ok((center.clone(), *radius)),
        _ => Err(Error::Unsupported(
            "bundle-level methods need a ball-constrained problem".into(),
        )),
    }
}

/// The set `{x : h(x_md, x) ≤ l}` as a cut.
pub(crate) enum LevelCut {
    Cut(Halfspace),
    /// Zero gradient and `f(x_md) ≤ l`: no restriction.
    Everything,
    /// Zero gradient and `f(x_md) > l`.
    Nothing,
}

pub(crate) fn level_cut(md: &Evaluation, x_md: &Point, level: f64) -> LevelCut {
    let rhs = level - md.f + md.grad.dot(x_md);
    if md.grad.iter().all(|&v| v == 0.0) {
        return if md.f <= level {
            LevelCut::Everything
        } else {
            LevelCut::Nothing
        };
    }
    LevelCut::Cut(Halfspace {
        normal: md.grad.clone(),
        offset: rhs,
    })
}

/// `{x : ⟨x − x_t, x_t − anchor⟩ ≥ 0}` written as `⟨anchor − x_t, x⟩ ≤ ⟨anchor − x_t, x_t⟩`;
/// `None` when `x_t = anchor`.
pub(crate) fn bar_cut(anchor: &Point, x_t: &Point) -> Option<Halfspace> {
    let n = anchor - x_t;
    if n.iter().all(|&v| v == 0.0) {
        return None;
    }
    let offset = n.dot(x_t);
    Some(Halfspace { normal: n, offset })
}

/// The first phase starts from the better of `p0` and the minimizer of
/// `h(p0,·)` over the ball; the lower bound is `h(p0, ·)` at that minimizer.
pub(crate) struct Start {
    pub point: Point,
    pub eval: Evaluation,
    pub lower: f64,
}

pub(crate) fn initial_phase_point(
    ev: &Evaluator,
    p0: &Point,
    p0_eval: &Evaluation,
    center: &Point,
    radius: f64,
) -> Start {
    let g = &p0_eval.grad;
    let gn = norm(g);
    let p1 = if gn > 0.0 {
        center - &(g * (radius / gn))
    } else {
        p0.clone()
    };
    let lower = p0_eval.f + g.dot(&(&p1 - p0));
    if gn == 0.0 {
        return Start {
            point: p0.clone(),
            eval: p0_eval.clone(),
            lower,
        };
    }
    let e1 = ev.eval(&p1);
    if e1.psi < p0_eval.psi {
        Start {
            point: p1,
            eval: e1,
            lower,
        }
    } else {
        Start {
            point: p0.clone(),
            eval: p0_eval.clone(),
            lower,
        }
    }
}

/// Intersects `loc` with the level cut and projects `anchor` onto the result.
/// Returns the restricted localizer and the projection, `None` when empty.
pub(crate) fn restrict_and_project(
    loc: &Localizer,
    cut: LevelCut,
    anchor: &Point,
) -> Result<(Localizer, Option<Point>)> {
    let under = match cut {
        LevelCut::Nothing => return Ok((loc.clone(), None)),
        LevelCut::Everything => loc.clone(),
        LevelCut::Cut(h) => append_cut(loc, h),
    };
    let proj = match project_localizer(anchor, &under)? {
        LocalizerProjection::Feasible(p) => Some(p),
        LocalizerProjection::Empty => None,
    };
    Ok((under, proj))
}

/// Shared per-run state: oracle counter, global iteration index, recorder
/// and the warm-started descent stepsize.
pub(crate) struct Driver<'a> {
    pub ev: Evaluator<'a>,
    pub rec: Recorder,
    pub k: usize,
    beta_prev: f64,
    params: LevelParams,
}

/// One inner iteration's figures for the trace.
pub(crate) struct InnerFigures {
    pub alpha: f64,
    pub upper: f64,
    pub lower: f64,
    pub descent_value: f64,
    pub aggregate_value: Option<f64>,
}

impl<'a> Driver<'a> {
    pub fn new(
        descent_problem: &'a CompositeProblem,
        algorithm: &'static str,
        x0: &Point,
        params: &LevelParams,
        stop: &StoppingRule,
    ) -> Result<(Self, Evaluation)> {
        let ev = Evaluator::new(descent_problem);
        let e0 = ev.eval(x0);
        let rec = Recorder::new(algorithm, stop, x0, e0.psi)?;
        Ok((
            Self {
                ev,
                rec,
                k: 0,
                beta_prev: params.initial_beta,
                params: params.clone(),
            },
            e0,
        ))
    }

    /// Descent step from the current aggregate point; advances `k`.
    pub fn descent(&mut self, x_ag: &Point, ag: &Evaluation) -> Result<BetaStep> {
        self.k += 1;
        let bs = line_search_beta(
            &self.ev,
            x_ag,
            ag,
            self.beta_prev,
            self.params.gamma2,
            self.params.gamma,
            self.k,
            &ScalingMatrix::Identity,
            self.params.max_backtracks,
        )?;
        self.beta_prev = bs.beta;
        Ok(bs)
    }

    pub fn push(
        &mut self,
        prev: &Point,
        bs: &BetaStep,
        fig: InnerFigures,
        x_ag: &Point,
    ) -> Option<Termination> {
        let g2 = projected_gradient_norm_sq(prev, &bs.x_bar, bs.beta);
        let mut r = IterRecord::new(self.k, fig.upper, g2, bs.beta);
        r.alpha = Some(fig.alpha);
        r.tau2 = bs.tau2;
        r.descent_value = Some(fig.descent_value);
        r.aggregate_value = fig.aggregate_value;
        r.lower_bound = Some(fig.lower);
        self.rec.push(r, self.ev.calls(), x_ag)
    }

    pub fn finish(
        self,
        termination: Termination,
        point: Point,
        value: f64,
        phases: Vec<PhaseRecord>,
    ) -> LevelRun {
        let calls = self.ev.calls();
        LevelRun {
            trace: self.rec.finish(termination, point, value, calls),
            phases,
            radius_warning: false,
            max_center_distance: None,
        }
    }
}
