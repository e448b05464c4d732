use crate::accel::{blend, check_start};
use crate::error::Result;
use crate::problem::{CompositeProblem, Point};
use crate::prox::Localizer;
use crate::trace::{StoppingRule, Termination};

use super::{
    bar_cut, bound_from_cut, initial_phase_point, level_cut, require_ball, require_zero_composite,
    restrict_and_project, Driver, InnerFigures, LevelParams, LevelRun, PhaseEnd, PhaseRecord,
};

/// Unified accelerated prox-level method on a ball-constrained problem.
///
/// Each phase keeps a localizer (the ball cut by retained level cuts and one
/// obtuse-angle cut), certifies a lower bound on it by dual ascent, and
/// projects the phase anchor onto the current level set approximation.
pub fn run_uapl(
    problem: &CompositeProblem,
    x0: &Point,
    params: &LevelParams,
    stop: &StoppingRule,
) -> Result<LevelRun> {
    params.validate()?;
    require_zero_composite(problem)?;
    let (center, radius) = require_ball(problem)?;
    check_start(problem, x0)?;
    let (mut d, e0) = Driver::new(problem, "uapl", x0, params, stop)?;
    let start = initial_phase_point(&d.ev, x0, &e0, &center, radius);
    let mut p = start.point;
    let mut pe = start.eval;
    let mut lb = start.lower;
    let base = Localizer::new(problem.set.clone(), params.max_cuts)?;
    let q = params.q();
    let mut phases: Vec<PhaseRecord> = Vec::new();

    for s in 1..=params.max_phases {
        if d.rec.gap_reached(pe.psi - lb) {
            return Ok(d.finish(Termination::GapTol, p, pe.psi, phases));
        }
        let upper0 = pe.psi;
        let lower0 = lb;
        let gap0 = upper0 - lower0;
        let level = params.eta * lower0 + (1.0 - params.eta) * upper0;
        let anchor = p.clone();
        let mut x_prev = p.clone();
        let mut xh = p.clone();
        let mut xhe = pe.clone();
        let mut loc = base.clone();
        let mut lb_t = lower0;
        let mut gaps = Vec::new();
        let mut t = 0;
        let (end, stopped) = loop {
            t += 1;
            let alpha = 2.0 / (t as f64 + 1.0);
            let x_md = blend(&xh, &x_prev, alpha);
            let md = d.ev.eval(&x_md);
            let offset = md.f - md.grad.dot(&x_md);
            lb_t = bound_from_cut(&md.grad, offset, &loc, level, lb_t)?;
            let (under, proj) = restrict_and_project(&loc, level_cut(&md, &x_md, level), &anchor)?;
            let x_t = match &proj {
                Some(x) => x.clone(),
                None => {
                    // no point of the localizer reaches the level
                    lb_t = lb_t.max(level);
                    xh.clone()
                }
            };

            let bs = d.descent(&xh, &xhe)?;
            let x_tilde = blend(&xh, &x_t, alpha);
            let te = d.ev.eval(&x_tilde);
            let prev = xh.clone();
            let best = bs.bar.psi.min(te.psi).min(xhe.psi);
            if bs.bar.psi == best {
                xh = bs.x_bar.clone();
                xhe = bs.bar.clone();
            } else if te.psi == best {
                xh = x_tilde;
                xhe = te.clone();
            }
            let upper = xhe.psi;
            gaps.push(upper - lb_t);
            let fig = InnerFigures {
                alpha,
                upper,
                lower: lb_t,
                descent_value: bs.bar.psi,
                aggregate_value: Some(te.psi),
            };
            let term = d.push(&prev, &bs, fig, &xh);

            let end = if lb_t <= upper && upper - lb_t <= q * gap0 {
                Some(PhaseEnd::GapContracted)
            } else if t >= params.max_inner {
                Some(PhaseEnd::InnerCap)
            } else {
                None
            };
            if end.is_some() || term.is_some() {
                break (end.unwrap_or(PhaseEnd::Interrupted), term);
            }
            if proj.is_some() {
                loc = under.with_bar(bar_cut(&anchor, &x_t));
            }
            x_prev = x_t;
        };
        if end == PhaseEnd::GapContracted {
            lb = lb_t;
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
            return Ok(d.finish(term, p, pe.psi, phases));
        }
    }
    let term = if d.rec.gap_reached(pe.psi - lb) {
        Termination::GapTol
    } else {
        Termination::MaxPhases
    };
    Ok(d.finish(term, p, pe.psi, phases))
}
