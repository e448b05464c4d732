use crate::accel::{blend, check_start};
use crate::error::{invalid, Result};
use crate::problem::{dist, CompositeProblem, FeasibleSet, Point};
use crate::prox::Localizer;
use crate::trace::{StoppingRule, Termination};

use super::{
    bar_cut, initial_phase_point, level_cut, require_ball, require_zero_composite,
    restrict_and_project, Driver, InnerFigures, LevelParams, LevelRun, PhaseEnd, PhaseRecord,
};

/// Unified fast accelerated prox-level method on a ball-constrained problem.
///
/// The localizer is a polyhedron in the whole space; each iteration projects
/// the ball center onto it. A projection outside the ball certifies that the
/// level is below the optimum.
pub fn run_ufapl(
    problem: &CompositeProblem,
    x0: &Point,
    params: &LevelParams,
    stop: &StoppingRule,
) -> Result<LevelRun> {
    require_zero_composite(problem)?;
    let (center, radius) = require_ball(problem)?;
    check_start(problem, x0)?;
    ufapl_core(problem, &center, radius, x0, params, stop, "ufapl")
}

/// Runs the fast level method on `B(x0, radius)` for a problem posed on the
/// whole space. Descent steps are taken over the whole space; the run is
/// flagged when an iterate reaches the boundary of the ball, which means the
/// radius does not cover the initial level set.
pub fn unconstrained_wrapper(
    problem: &CompositeProblem,
    x0: &Point,
    radius: f64,
    params: &LevelParams,
    stop: &StoppingRule,
) -> Result<LevelRun> {
    require_zero_composite(problem)?;
    if !matches!(problem.set, FeasibleSet::WholeSpace) {
        return Err(invalid("the wrapper expects a problem posed on the whole space"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    check_start(problem, x0)?;
    let mut run = ufapl_core(problem, x0, radius, x0, params, stop, "ufapl-unconstrained")?;
    run.radius_warning = run.max_center_distance.is_some_and(|m| m >= radius);
    Ok(run)
}

pub(super) fn ufapl_core(
    problem: &CompositeProblem,
    center: &Point,
    radius: f64,
    x0: &Point,
    params: &LevelParams,
    stop: &StoppingRule,
    name: &'static str,
) -> Result<LevelRun> {
    params.validate()?;
    let (mut d, e0) = Driver::new(problem, name, x0, params, stop)?;
    let start = initial_phase_point(&d.ev, x0, &e0, center, radius);
    let mut p = start.point;
    let mut pe = start.eval;
    let mut lb = start.lower;
    let base = Localizer::new(FeasibleSet::WholeSpace, params.max_cuts)?;
    let mut max_distance = dist(&p, center);
    let mut phases: Vec<PhaseRecord> = Vec::new();

    for s in 1..=params.max_phases {
        if d.rec.gap_reached(pe.psi - lb) {
            let mut run = d.finish(Termination::GapTol, p, pe.psi, phases);
            run.max_center_distance = Some(max_distance);
            return Ok(run);
        }
        let upper0 = pe.psi;
        let lower0 = lb;
        let level = params.eta * lower0 + (1.0 - params.eta) * upper0;
        let target = level + params.theta * (upper0 - level);
        let mut x_prev = p.clone();
        let mut xh = p.clone();
        let mut xhe = pe.clone();
        let mut loc = base.clone();
        let mut gaps = Vec::new();
        let mut t = 0;
        let (end, stopped) = loop {
            t += 1;
            let alpha = 2.0 / (t as f64 + 1.0);
            let x_md = blend(&xh, &x_prev, alpha);
            let md = d.ev.eval(&x_md);
            let (under, proj) = restrict_and_project(&loc, level_cut(&md, &x_md, level), center)?;

            let bs = d.descent(&xh, &xhe)?;
            let prev = xh.clone();
            if bs.bar.psi <= xhe.psi {
                xh = bs.x_bar.clone();
                xhe = bs.bar.clone();
            }
            max_distance = max_distance.max(dist(&bs.x_bar, center));
            let x_t = proj.filter(|x| dist(x, center) <= radius);
            let mut fig = InnerFigures {
                alpha,
                upper: xhe.psi,
                lower: lower0,
                descent_value: bs.bar.psi,
                aggregate_value: None,
            };
            // the level set misses the ball: the level is a valid lower bound
            let Some(x_t) = x_t else {
                fig.lower = level;
                gaps.push(xhe.psi - level);
                let term = d.push(&prev, &bs, fig, &xh);
                break (PhaseEnd::LevelInfeasible, term);
            };

            let x_tilde = blend(&prev, &x_t, alpha);
            let te = d.ev.eval(&x_tilde);
            if te.psi < xhe.psi {
                xh = x_tilde;
                xhe = te.clone();
            }
            max_distance = max_distance.max(dist(&xh, center));
            fig.upper = xhe.psi;
            fig.aggregate_value = Some(te.psi);
            gaps.push(xhe.psi - lower0);
            let term = d.push(&prev, &bs, fig, &xh);
            let end = if xhe.psi <= target {
                Some(PhaseEnd::UpperReduced)
            } else if t >= params.max_inner {
                Some(PhaseEnd::InnerCap)
            } else {
                None
            };
            if end.is_some() || term.is_some() {
                break (end.unwrap_or(PhaseEnd::Interrupted), term);
            }
            loc = under.with_bar(bar_cut(center, &x_t));
            x_prev = x_t;
        };
        if end == PhaseEnd::LevelInfeasible {
            lb = level;
        }
        p = xh;
        pe = xhe;
        phases.push(PhaseRecord {
            s,
            start_upper: upper0,
            start_lower: lower0,
            level,
            end_upper: pe.psi,
            end_lower: lb,
            inner: t,
            end,
            gaps,
        });
        if let Some(term) = stopped {
            let mut run = d.finish(term, p, pe.psi, phases);
            run.max_center_distance = Some(max_distance);
            return Ok(run);
        }
    }
    let term = if d.rec.gap_reached(pe.psi - lb) {
        Termination::GapTol
    } else {
        Termination::MaxPhases
    };
    let mut run = d.finish(term, p, pe.psi, phases);
    run.max_center_distance = Some(max_distance);
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FnOracle, HalfSquaredNorm};
    use crate::CompositeTerm;
    use ndarray::array;
    use std::sync::Arc;

    fn shifted_square(target: Point, radius: f64) -> CompositeProblem {
        let n = target.len();
        let t = target.clone();
        // curvatures 1, 3, 5, … keep the descent step from landing exactly
        let w = Point::from_iter((0..n).map(|i| 1.0 + 2.0 * i as f64));
        let o = FnOracle::new(n, move |x: &Point| {
            let d = x - &t;
            let wd = &d * &w;
            (0.5 * d.dot(&wd), wd)
        });
        let ball = FeasibleSet::ball(Point::zeros(n), radius).unwrap();
        CompositeProblem::new(Arc::new(o), CompositeTerm::Zero, ball).unwrap()
    }

    #[test]
    fn first_lower_bound_is_ball_linear_min() {
        let p = shifted_square(array![0.3, 0.4], 1.0);
        let run = run_ufapl(&p, &array![0.0, 0.0], &LevelParams::default(), &StoppingRule::iterations(1))
            .unwrap();
        // f(0) − R‖f'(0)‖ with f'(0) = −(0.3, 1.2)
        let expected = 0.285 - 1.53f64.sqrt();
        assert!((run.phases[0].start_lower - expected).abs() < 1e-14);
    }

    #[test]
    fn converges_with_both_phase_endings() {
        let p = shifted_square(array![0.3, -0.2, 0.1, 0.05], 1.0);
        let run = run_ufapl(
            &p,
            &array![0.0, 0.0, 0.0, 0.0],
            &LevelParams::default(),
            &StoppingRule::iterations(3000).with_gap_tol(1e-8),
        )
        .unwrap();
        assert_eq!(run.trace.termination, Termination::GapTol);
        for ph in &run.phases {
            assert!(ph.end_lower <= 1e-15 && ph.end_upper >= 0.0);
            assert!(ph.end_gap() <= 0.75 * ph.start_gap() + 1e-15);
        }
        assert!(run.phases.iter().any(|p| p.end == PhaseEnd::LevelInfeasible));
    }

    #[test]
    fn infeasible_branch_gap_is_eta_fraction() {
        let p = shifted_square(array![0.5, 0.5], 1.0);
        let params = LevelParams {
            eta: 0.3,
            ..LevelParams::default()
        };
        let run = run_ufapl(&p, &array![0.0, 0.0], &params, &StoppingRule::iterations(500).with_gap_tol(1e-6))
            .unwrap();
        let mut seen = false;
        for ph in run.phases.iter().filter(|p| p.end == PhaseEnd::LevelInfeasible) {
            seen = true;
            assert_eq!(ph.end_lower, ph.level);
            assert!(ph.end_gap() <= params.eta * ph.start_gap() * (1.0 + 1e-12));
        }
        assert!(seen);
    }

    #[test]
    fn wrapper_radius_flag() {
        let p = CompositeProblem::unconstrained(Arc::new(HalfSquaredNorm { dim: 2 }));
        let x0 = array![0.6, 0.8];
        let stop = StoppingRule::iterations(500).with_gap_tol(1e-8);
        let run = unconstrained_wrapper(&p, &x0, 2.5, &LevelParams::default(), &stop).unwrap();
        assert!(!run.radius_warning);
        assert!(run.trace.final_value <= 1e-8);
        let run = unconstrained_wrapper(&p, &x0, 0.1, &LevelParams::default(), &stop).unwrap();
        assert!(run.radius_warning);
    }
}
