use crate::error::{invalid, Error, Result};
use crate::problem::{CompositeProblem, Evaluation, Evaluator, FeasibleSet, Point};
use crate::prox::{prox_step, scaled_prox_step, LbfgsMemory, ScalingMatrix};
use crate::trace::{IterRecord, Recorder, RunTrace, StoppingRule};

use super::{blend, check_start, projected_gradient_norm_sq};

/// How the trial stepsizes `λ̂_k`, `β̂_k` are chosen. The first iteration
/// always uses `initial_lambda` and `initial_beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitPolicy {
    /// Barzilai-Borwein ratios of the most recent gradient pairs, floored at `σ`.
    Bb,
    /// Previous accepted values: `λ̂_k = η_{k−1}`, `β̂_k = β_{k−1}`.
    WarmStart,
    /// `initial_lambda` and `initial_beta` every iteration.
    Constant,
}

/// Scaling of the descent subproblem.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalingPolicy {
    Identity,
    /// Fixed diagonal, entries `≥ σ`.
    Diagonal(Point),
    /// Limited-memory BFGS built from successive aggregate iterates.
    /// Whole space and `X ≡ 0` only.
    LimitedMemory { memory: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpfagParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub delta: f64,
    pub init: InitPolicy,
    pub initial_lambda: f64,
    pub initial_beta: f64,
    pub scaling: ScalingPolicy,
    pub max_backtracks: usize,
}

impl Default for UpfagParams {
    fn default() -> Self {
        Self {
            gamma1: 0.5,
            gamma2: 0.5,
            gamma: 0.4,
            sigma: 0.5,
            delta: 1e-6,
            init: InitPolicy::Bb,
            initial_lambda: 1.0,
            initial_beta: 1.0,
            scaling: ScalingPolicy::Identity,
            max_backtracks: 60,
        }
    }
}

impl UpfagParams {
    pub fn with_init(mut self, init: InitPolicy, initial_lambda: f64, initial_beta: f64) -> Self {
        self.init = init;
        self.initial_lambda = initial_lambda;
        self.initial_beta = initial_beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.gamma1) || !unit(self.gamma2) {
            return Err(invalid("gamma1 and gamma2 must lie in (0,1)"));
        }
        if !(self.gamma > 0.0 && self.gamma < self.sigma && self.sigma < 1.0) {
            return Err(invalid("need 0 < gamma < sigma < 1"));
        }
        if !(self.delta > 0.0) {
            return Err(invalid("delta must be positive"));
        }
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.initial_lambda) || !pos(self.initial_beta) {
            return Err(invalid("initial stepsizes must be positive and finite"));
        }
        if let ScalingPolicy::LimitedMemory { memory: 0 } = self.scaling {
            return Err(invalid("quasi-Newton memory must be >= 1"));
        }
        Ok(())
    }

    fn scaling_matrix(&self, problem: &CompositeProblem) -> Result<ScalingMatrix> {
        match &self.scaling {
            ScalingPolicy::Identity => Ok(ScalingMatrix::Identity),
            ScalingPolicy::Diagonal(d) => {
                crate::error::check_dim(problem.dim(), d.len())?;
                ScalingMatrix::diagonal(d.clone(), self.sigma)
            }
            ScalingPolicy::LimitedMemory { memory } => {
                if !matches!(problem.set, FeasibleSet::WholeSpace) || !problem.composite.is_zero() {
                    return Err(Error::Unsupported(
                        "quasi-Newton scaling needs the whole space and a zero composite term"
                            .into(),
                    ));
                }
                Ok(ScalingMatrix::LimitedMemory(LbfgsMemory::new(*memory, self.sigma)?))
            }
        }
    }
}

/// State carried between iterations. `k` is the index of the last completed
/// iteration.
#[derive(Debug, Clone)]
pub struct AccelState {
    pub k: usize,
    pub x: Point,
    pub x_ag: Point,
    pub ag: Evaluation,
    /// `Λ_k = Σ_{i≤k} λ_i`.
    pub big_lambda: f64,
    pub eta_prev: Option<f64>,
    pub beta_prev: Option<f64>,
    /// `(x^{md} − x^{ag}_{prev}, f'(x^{md}) − f'(x^{ag}_{prev}))` of the last iteration.
    pub md_pair: Option<(Point, Point)>,
    /// Differences of the two most recent distinct aggregate iterates.
    pub ag_pair: Option<(Point, Point)>,
}

impl AccelState {
    pub fn new(x0: Point, ag: Evaluation) -> Self {
        Self {
            k: 0,
            x: x0.clone(),
            x_ag: x0,
            ag,
            big_lambda: 0.0,
            eta_prev: None,
            beta_prev: None,
            md_pair: None,
            ag_pair: None,
        }
    }
}

/// Outcome of the λ line search.
#[derive(Debug, Clone)]
pub struct LambdaStep {
    pub eta: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// `Λ_k` after acceptance.
    pub big_lambda: f64,
    pub x_md: Point,
    pub md: Evaluation,
    pub x: Point,
    pub x_tilde: Point,
    pub tilde: Evaluation,
    pub tau1: usize,
}

/// Outcome of the β line search.
#[derive(Debug, Clone)]
pub struct BetaStep {
    pub beta: f64,
    pub x_bar: Point,
    pub bar: Evaluation,
    pub tau2: usize,
}

/// `max{⟨s,y⟩/⟨y,y⟩, σ}`, and `σ` when `y = 0`.
pub fn bb_stepsize(s: &Point, y: &Point, sigma: f64) -> f64 {
    let yy = y.dot(y);
    if yy == 0.0 {
        return sigma;
    }
    let r = s.dot(y) / yy;
    if r.is_nan() {
        sigma
    } else {
        r.max(sigma)
    }
}

/// Backtracks `η = λ̂ γ₁^τ` from `τ = 0` until the aggregated point satisfies
/// `f(x̃) ≤ f(x^{md}) + α⟨f'(x^{md}), x_k − x_{k−1}⟩ + α/(2λ)‖x_k − x_{k−1}‖² + δα`,
/// where `λ = (η + √(η² + 4ηΛ_{k−1}))/2` and `α = λ/(Λ_{k−1} + λ)`.
pub fn line_search_lambda(
    ev: &Evaluator,
    state: &AccelState,
    lambda_hat: f64,
    gamma1: f64,
    delta: f64,
    max_backtracks: usize,
) -> Result<LambdaStep> {
    if !(lambda_hat > 0.0) {
        return Err(invalid(format!("initial lambda must be positive, got {lambda_hat}")));
    }
    let problem = ev.problem;
    let prev_big = state.big_lambda;
    let mut eta = lambda_hat;
    for tau1 in 0..=max_backtracks {
        let lambda = (eta + (eta * eta + 4.0 * eta * prev_big).sqrt()) / 2.0;
        let big_lambda = prev_big + lambda;
        let alpha = if prev_big == 0.0 { 1.0 } else { lambda / big_lambda };
        let x_md = blend(&state.x_ag, &state.x, alpha);
        let md = ev.eval(&x_md);
        let x = prox_step(&md.grad, &state.x, lambda, &problem.composite, &problem.set)?;
        let x_tilde = blend(&state.x_ag, &x, alpha);
        let tilde = ev.eval(&x_tilde);
        let d = &x - &state.x;
        let model =
            md.f + alpha * md.grad.dot(&d) + alpha / (2.0 * lambda) * d.dot(&d) + delta * alpha;
        if tilde.f <= model {
            return Ok(LambdaStep {
                eta,
                lambda,
                alpha,
                big_lambda,
                x_md,
                md,
                x,
                x_tilde,
                tilde,
                tau1,
            });
        }
        eta *= gamma1;
    }
    Err(Error::LineSearch {
        which: "lambda",
        iteration: state.k + 1,
        max_backtracks,
    })
}

/// Backtracks `β = β̂ γ₂^τ` from `τ = 0` until the scaled descent step from
/// `x_ag_prev` satisfies `Ψ(x̄) ≤ Ψ(x_ag_prev) − γ/(2β)‖x̄ − x_ag_prev‖² + 1/k`.
#[allow(clippy::too_many_arguments)]
pub fn line_search_beta(
    ev: &Evaluator,
    x_ag_prev: &Point,
    ag_prev: &Evaluation,
    beta_hat: f64,
    gamma2: f64,
    gamma: f64,
    k: usize,
    scaling: &ScalingMatrix,
    max_backtracks: usize,
) -> Result<BetaStep> {
    if !(beta_hat > 0.0) {
        return Err(invalid(format!("initial beta must be positive, got {beta_hat}")));
    }
    if k == 0 {
        return Err(invalid("iteration index must be >= 1"));
    }
    let problem = ev.problem;
    let slack = 1.0 / k as f64;
    let mut beta = beta_hat;
    for tau2 in 0..=max_backtracks {
        let x_bar = scaled_prox_step(
            &ag_prev.grad,
            x_ag_prev,
            beta,
            scaling,
            &problem.composite,
            &problem.set,
        )?;
        let bar = ev.eval(&x_bar);
        let d = &x_bar - x_ag_prev;
        if bar.psi <= ag_prev.psi - gamma / (2.0 * beta) * d.dot(&d) + slack {
            return Ok(BetaStep {
                beta,
                x_bar,
                bar,
                tau2,
            });
        }
        beta *= gamma2;
    }
    Err(Error::LineSearch {
        which: "beta",
        iteration: k,
        max_backtracks,
    })
}

pub(crate) fn initial_lambda(params: &UpfagParams, state: &AccelState) -> f64 {
    match params.init {
        InitPolicy::Constant => params.initial_lambda,
        InitPolicy::WarmStart => state.eta_prev.unwrap_or(params.initial_lambda),
        InitPolicy::Bb => state
            .md_pair
            .as_ref()
            .map_or(params.initial_lambda, |(s, y)| bb_stepsize(s, y, params.sigma)),
    }
}

pub(crate) fn initial_beta(params: &UpfagParams, state: &AccelState) -> f64 {
    match params.init {
        InitPolicy::Constant => params.initial_beta,
        InitPolicy::WarmStart => state.beta_prev.unwrap_or(params.initial_beta),
        InitPolicy::Bb => state
            .ag_pair
            .as_ref()
            .map_or(params.initial_beta, |(s, y)| bb_stepsize(s, y, params.sigma)),
    }
}

/// Unified problem-parameter free accelerated gradient method.
pub fn run_upfag(
    problem: &CompositeProblem,
    x0: &Point,
    params: &UpfagParams,
    stop: &StoppingRule,
) -> Result<RunTrace> {
    params.validate()?;
    check_start(problem, x0)?;
    let mut scaling = params.scaling_matrix(problem)?;
    let ev = Evaluator::new(problem);
    let ag0 = ev.eval(x0);
    let mut rec = Recorder::new("upfag", stop, x0, ag0.psi)?;
    let mut state = AccelState::new(x0.clone(), ag0);
    loop {
        let k = state.k + 1;
        let ls = line_search_lambda(
            &ev,
            &state,
            initial_lambda(params, &state),
            params.gamma1,
            params.delta,
            params.max_backtracks,
        )?;
        let bs = line_search_beta(
            &ev,
            &state.x_ag,
            &state.ag,
            initial_beta(params, &state),
            params.gamma2,
            params.gamma,
            k,
            &scaling,
            params.max_backtracks,
        )?;
        let grad_norm_sq = projected_gradient_norm_sq(&state.x_ag, &bs.x_bar, bs.beta);
        let mut r = IterRecord::new(k, 0.0, grad_norm_sq, bs.beta);
        r.alpha = Some(ls.alpha);
        r.eta = Some(ls.eta);
        r.lambda = Some(ls.lambda);
        r.tau1 = ls.tau1;
        r.tau2 = bs.tau2;
        r.descent_value = Some(bs.bar.psi);
        r.aggregate_value = Some(ls.tilde.psi);

        let md_pair = (&ls.x_md - &state.x_ag, &ls.md.grad - &state.ag.grad);
        // preference on ties: descent point, aggregated point, previous point
        let best = bs.bar.psi.min(ls.tilde.psi).min(state.ag.psi);
        let next = if bs.bar.psi == best {
            Some((bs.x_bar, bs.bar))
        } else if ls.tilde.psi == best {
            Some((ls.x_tilde, ls.tilde))
        } else {
            None
        };
        if let Some((x_ag, ag)) = next {
            let s = &x_ag - &state.x_ag;
            if s.iter().any(|&v| v != 0.0) {
                let y = &ag.grad - &state.ag.grad;
                if let ScalingMatrix::LimitedMemory(mem) = &mut scaling {
                    mem.push(s.clone(), y.clone());
                }
                state.ag_pair = Some((s, y));
            }
            state.x_ag = x_ag;
            state.ag = ag;
        }
        state.k = k;
        state.x = ls.x;
        state.big_lambda = ls.big_lambda;
        state.eta_prev = Some(ls.eta);
        state.beta_prev = Some(bs.beta);
        state.md_pair = Some(md_pair);

        r.value = state.ag.psi;
        if let Some(t) = rec.push(r, ev.calls(), &state.x_ag) {
            let value = state.ag.psi;
            return Ok(rec.finish(t, state.x_ag, value, ev.calls()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FnOracle, HalfSquaredNorm, SmoothOracle};
    use ndarray::array;
    use std::sync::Arc;

    fn scaled_square(l: f64, dim: usize) -> CompositeProblem {
        let o = FnOracle::new(dim, move |x: &Point| (0.5 * l * x.dot(x), x * l)).with_lipschitz(l);
        CompositeProblem::unconstrained(Arc::new(o))
    }

    #[test]
    fn bb_examples() {
        assert_eq!(bb_stepsize(&array![1.0, 0.0], &array![2.0, 0.0], 0.1), 0.5);
        assert_eq!(bb_stepsize(&array![1.0, 0.0], &array![0.0, 1.0], 0.1), 0.1);
        assert_eq!(bb_stepsize(&array![1.0, 0.0], &array![0.0, 0.0], 0.25), 0.25);
    }

    #[test]
    fn first_lambda_collapses_to_eta() {
        let p = scaled_square(1.0, 2);
        let ev = Evaluator::new(&p);
        let x0 = array![0.3, -0.4];
        let st = AccelState::new(x0.clone(), ev.eval(&x0));
        let ls = line_search_lambda(&ev, &st, 0.7, 0.5, 1e-6, 60).unwrap();
        assert_eq!(ls.lambda, 0.7);
        assert_eq!(ls.alpha, 1.0);
        assert_eq!(ls.x_md, x0);
    }

    #[test]
    fn unit_lambda_accepted_on_half_square() {
        let p = CompositeProblem::unconstrained(Arc::new(HalfSquaredNorm { dim: 1 }));
        let ev = Evaluator::new(&p);
        let x0 = array![1.0];
        let st = AccelState::new(x0.clone(), ev.eval(&x0));
        let ls = line_search_lambda(&ev, &st, 1.0, 0.5, 1e-6, 60).unwrap();
        assert_eq!(ls.tau1, 0);
    }

    /// Independent scalar re-derivation of the λ acceptance test on
    /// `f(x) = L x²/2` with the given state.
    fn lambda_condition(l: f64, x_prev: f64, x_ag: f64, big: f64, eta: f64, delta: f64) -> bool {
        let lam = (eta + (eta * eta + 4.0 * eta * big).sqrt()) / 2.0;
        let alpha = lam / (big + lam);
        let md = (1.0 - alpha) * x_ag + alpha * x_prev;
        let x = x_prev - lam * l * md;
        let xt = (1.0 - alpha) * x_ag + alpha * x;
        let f = |v: f64| 0.5 * l * v * v;
        let d = x - x_prev;
        f(xt) <= f(md) + alpha * l * md * d + alpha / (2.0 * lam) * d * d + delta * alpha
    }

    #[test]
    fn lambda_search_matches_exhaustive_scan() {
        let l = 10.0;
        let p = scaled_square(l, 1);
        let ev = Evaluator::new(&p);
        for &(x_prev, x_ag, big) in &[(1.0, 1.0, 0.0), (0.8, -0.3, 0.05), (-2.0, 0.5, 1.3)] {
            let mut st = AccelState::new(array![x_ag], ev.eval(&array![x_ag]));
            st.x = array![x_prev];
            st.big_lambda = big;
            let ls = line_search_lambda(&ev, &st, 1.0, 0.5, 1e-3, 60).unwrap();
            let first: usize = (0..=30usize)
                .find(|&t| lambda_condition(l, x_prev, x_ag, big, 0.5f64.powi(t as i32), 1e-3))
                .unwrap();
            assert_eq!(ls.tau1, first);
            assert_eq!(ls.eta, 0.5f64.powi(first as i32));
            assert!((ls.alpha * ls.lambda - ls.eta).abs() <= 1e-12 * ls.eta.max(1.0));
        }
    }

    #[test]
    fn beta_examples() {
        let p = CompositeProblem::unconstrained(Arc::new(HalfSquaredNorm { dim: 1 }));
        let ev = Evaluator::new(&p);
        let x = array![2.0];
        let e = ev.eval(&x);
        let bs = line_search_beta(&ev, &x, &e, 1.0, 0.5, 0.4, 3, &ScalingMatrix::Identity, 60)
            .unwrap();
        assert_eq!(bs.tau2, 0);
        let z = array![0.0];
        let ez = ev.eval(&z);
        let bs = line_search_beta(&ev, &z, &ez, 1.0, 0.5, 0.4, 7, &ScalingMatrix::Identity, 60)
            .unwrap();
        assert_eq!(bs.tau2, 0);
        assert_eq!(bs.x_bar, z);
    }

    #[test]
    fn beta_search_matches_exhaustive_scan() {
        let l = 100.0;
        let p = scaled_square(l, 1);
        let ev = Evaluator::new(&p);
        let k = 1000;
        for &x in &[3.0, -1.5, 0.2] {
            let xp = array![x];
            let e = ev.eval(&xp);
            let bs =
                line_search_beta(&ev, &xp, &e, 1.0, 0.5, 0.4, k, &ScalingMatrix::Identity, 60)
                    .unwrap();
            let f = |v: f64| 0.5 * l * v * v;
            let ok = |b: f64| {
                let xb = x - b * l * x;
                f(xb) <= f(x) - 0.4 / (2.0 * b) * (xb - x).powi(2) + 1.0 / k as f64
            };
            let largest = (0..=40).map(|t| 0.5f64.powi(t)).find(|&b| ok(b)).unwrap();
            assert_eq!(bs.beta, largest);
            assert!(bs.beta >= 0.5 * largest);
        }
    }

    #[test]
    fn exhausted_search_is_an_error() {
        // gradient far larger than the function suggests: no step is accepted
        let o = FnOracle::new(1, |x: &Point| (x[0].abs().sqrt() * 1e6, array![1e30 * x[0].signum()]));
        let p = CompositeProblem::unconstrained(Arc::new(o));
        let ev = Evaluator::new(&p);
        let x = array![1.0];
        let e = ev.eval(&x);
        let err = line_search_beta(&ev, &x, &e, 1.0, 0.5, 0.4, 1, &ScalingMatrix::Identity, 3)
            .unwrap_err();
        assert!(matches!(err, Error::LineSearch { which: "beta", .. }));
    }

    #[test]
    fn monotone_and_warm_start_telescopes() {
        let p = scaled_square(25.0, 3);
        let x0 = array![1.0, -2.0, 0.5];
        let params = UpfagParams::default().with_init(InitPolicy::WarmStart, 1.0, 1.0);
        let t = run_upfag(&p, &x0, &params, &StoppingRule::iterations(40)).unwrap();
        let vals: Vec<f64> = t.values().collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        let n = t.iterations.len();
        let last = &t.iterations[n - 1];
        let tau1: usize = t.iterations.iter().map(|r| r.tau1).sum();
        let tau2: usize = t.iterations.iter().map(|r| r.tau2).sum();
        let lhs1 = (1.0 / last.eta.unwrap()).ln() / 2f64.ln();
        let lhs2 = (1.0 / last.beta).ln() / 2f64.ln();
        assert!((tau1 as f64 - lhs1).abs() < 1e-9);
        assert!((tau2 as f64 - lhs2).abs() < 1e-9);
    }

    #[test]
    fn alpha_one_first_then_interior() {
        let p = scaled_square(4.0, 2);
        let t = run_upfag(&p, &array![1.0, 1.0], &UpfagParams::default(), &StoppingRule::iterations(20))
            .unwrap();
        assert_eq!(t.iterations[0].alpha, Some(1.0));
        assert!(t.iterations[1..]
            .iter()
            .all(|r| r.alpha.unwrap() > 0.0 && r.alpha.unwrap() < 1.0));
    }

    #[test]
    fn quasi_newton_solves_quadratic_quickly() {
        let d = array![1.0, 10.0, 100.0];
        let dd = d.clone();
        let o = FnOracle::new(3, move |x: &Point| (0.5 * (x * x * &dd).sum(), x * &dd));
        let p = CompositeProblem::unconstrained(Arc::new(o));
        let params = UpfagParams {
            scaling: ScalingPolicy::LimitedMemory { memory: 5 },
            ..UpfagParams::default()
        };
        let t = run_upfag(
            &p,
            &array![1.0, 1.0, 1.0],
            &params,
            &StoppingRule::iterations(500).with_grad_tol(1e-10),
        )
        .unwrap();
        assert!(t.min_grad_norm_sq <= 1e-10);
        let with_bfgs_unconstrained_only = CompositeProblem::new(
            Arc::new(HalfSquaredNorm { dim: 3 }) as Arc<dyn SmoothOracle>,
            crate::CompositeTerm::weighted_l1(0.1).unwrap(),
            FeasibleSet::WholeSpace,
        )
        .unwrap();
        assert!(matches!(
            run_upfag(&with_bfgs_unconstrained_only, &array![1.0, 1.0, 1.0], &params, &StoppingRule::iterations(3)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn rejects_bad_params() {
        let bad = UpfagParams {
            gamma: 0.6,
            ..UpfagParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = UpfagParams {
            gamma1: 1.0,
            ..UpfagParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
