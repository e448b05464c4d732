use crate::error::{invalid, Result};
use crate::problem::{CompositeProblem, Evaluation, Evaluator, Point};
use crate::prox::prox_step;
use crate::trace::{IterRecord, Recorder, RunTrace, StoppingRule};

use super::{blend, check_start, projected_gradient_norm_sq};

/// Stepsize policy `α_k = 2/(k+1)`, `λ_k = k/(2L)`, `β_k = 1/L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UagParams {
    pub lipschitz: f64,
}

impl UagParams {
    pub fn new(lipschitz: f64) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(invalid(format!(
                "UAG needs a positive Lipschitz estimate, got {lipschitz}"
            )));
        }
        Ok(Self { lipschitz })
    }

    pub fn alpha(&self, k: usize) -> f64 {
        2.0 / (k as f64 + 1.0)
    }

    pub fn lambda(&self, k: usize) -> f64 {
        k as f64 / (2.0 * self.lipschitz)
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.lipschitz
    }
}

/// Iterates carried between UAG steps: `x_{k−1}` and `x^{ag}_{k−1}`.
#[derive(Debug, Clone)]
pub struct UagState {
    pub x: Point,
    pub x_ag: Point,
    pub ag: Evaluation,
}

/// Everything one UAG iteration computes.
#[derive(Debug, Clone)]
pub struct UagStep {
    pub alpha: f64,
    pub lambda: f64,
    pub beta: f64,
    pub x_md: Point,
    pub x: Point,
    pub x_tilde: Point,
    pub tilde: Evaluation,
    pub x_bar: Point,
    pub bar: Evaluation,
    pub grad_norm_sq: f64,
}

/// Iteration `k ≥ 1` of UAG from `state`.
pub fn uag_step(ev: &Evaluator, state: &UagState, k: usize, params: &UagParams) -> Result<UagStep> {
    let problem = ev.problem;
    let alpha = params.alpha(k);
    let lambda = params.lambda(k);
    let beta = params.beta();
    let x_md = blend(&state.x_ag, &state.x, alpha);
    let md = ev.eval(&x_md);
    let x = prox_step(&md.grad, &state.x, lambda, &problem.composite, &problem.set)?;
    let x_tilde = blend(&state.x_ag, &x, alpha);
    let x_bar = prox_step(&state.ag.grad, &state.x_ag, beta, &problem.composite, &problem.set)?;
    let tilde = ev.eval(&x_tilde);
    let bar = ev.eval(&x_bar);
    let grad_norm_sq = projected_gradient_norm_sq(&state.x_ag, &x_bar, beta);
    Ok(UagStep {
        alpha,
        lambda,
        beta,
        x_md,
        x,
        x_tilde,
        tilde,
        x_bar,
        bar,
        grad_norm_sq,
    })
}

/// Unified accelerated gradient method.
pub fn run_uag(
    problem: &CompositeProblem,
    x0: &Point,
    params: &UagParams,
    stop: &StoppingRule,
) -> Result<RunTrace> {
    UagParams::new(params.lipschitz)?;
    check_start(problem, x0)?;
    let ev = Evaluator::new(problem);
    let ag = ev.eval(x0);
    let mut rec = Recorder::new("uag", stop, x0, ag.psi)?;
    let mut state = UagState {
        x: x0.clone(),
        x_ag: x0.clone(),
        ag,
    };
    let mut k = 0;
    loop {
        k += 1;
        let step = uag_step(&ev, &state, k, params)?;
        let mut r = IterRecord::new(k, 0.0, step.grad_norm_sq, step.beta);
        r.alpha = Some(step.alpha);
        r.lambda = Some(step.lambda);
        r.descent_value = Some(step.bar.psi);
        r.aggregate_value = Some(step.tilde.psi);
        // ties go to the descent point
        let (x_ag, ag) = if step.bar.psi <= step.tilde.psi {
            (step.x_bar, step.bar)
        } else {
            (step.x_tilde, step.tilde)
        };
        r.value = ag.psi;
        state = UagState {
            x: step.x,
            x_ag,
            ag,
        };
        if let Some(t) = rec.push(r, ev.calls(), &state.x_ag) {
            let value = state.ag.psi;
            return Ok(rec.finish(t, state.x_ag, value, ev.calls()));
        }
    }
}
