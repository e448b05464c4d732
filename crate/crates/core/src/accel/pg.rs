use crate::error::{invalid, Result};
use crate::problem::{CompositeProblem, Evaluator, Point};
use crate::prox::prox_step;
use crate::trace::{IterRecord, Recorder, RunTrace, StoppingRule};

use super::{check_start, projected_gradient_norm_sq};

/// Projected (proximal) gradient method with constant stepsize `1/L`.
pub fn run_pg(
    problem: &CompositeProblem,
    x0: &Point,
    lipschitz: f64,
    stop: &StoppingRule,
) -> Result<RunTrace> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(invalid(format!("Lipschitz estimate must be positive, got {lipschitz}")));
    }
    check_start(problem, x0)?;
    let ev = Evaluator::new(problem);
    let beta = 1.0 / lipschitz;
    let mut x = x0.clone();
    let mut cur = ev.eval(&x);
    let mut rec = Recorder::new("pg", stop, x0, cur.psi)?;
    let mut k = 0;
    loop {
        k += 1;
        let next = prox_step(&cur.grad, &x, beta, &problem.composite, &problem.set)?;
        let g2 = projected_gradient_norm_sq(&x, &next, beta);
        x = next;
        cur = ev.eval(&x);
        let r = IterRecord::new(k, cur.psi, g2, beta);
        if let Some(t) = rec.push(r, ev.calls(), &x) {
            return Ok(rec.finish(t, x, cur.psi, ev.calls()));
        }
    }
}
