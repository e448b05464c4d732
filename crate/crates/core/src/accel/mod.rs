//! Gradient-type solvers: the projected-gradient baseline, the unified
//! accelerated gradient method with a fixed Lipschitz-based policy, and the
//! parameter-free variant with two line searches.

mod pg;
mod uag;
mod upfag;

pub use pg::run_pg;
pub use uag::{run_uag, uag_step, UagParams, UagState, UagStep};
pub use upfag::{
    bb_stepsize, line_search_beta, line_search_lambda, run_upfag, AccelState, BetaStep,
    InitPolicy, LambdaStep, ScalingPolicy, UpfagParams,
};

use crate::error::{invalid, Result};
use crate::problem::{CompositeProblem, Point};

/// `‖(prev − proxed)/β‖²`.
pub fn projected_gradient_norm_sq(prev: &Point, proxed: &Point, beta: f64) -> f64 {
    debug_assert!(beta > 0.0);
    prev.iter()
        .zip(proxed.iter())
        .map(|(a, b)| {
            let d = (a - b) / beta;
            d * d
        })
        .sum()
}

/// The constant `L(ν,H)` that turns a Hölder bound with exponent `ν` into a
/// quadratic bound up to an additive `1/k` slack:
/// `{H / (2[(1+ν)/(1−ν)]^{(1−ν)/2})}^{2/(1+ν)}` for `ν < 1` and `H/2` at `ν = 1`.
pub fn holder_constant(nu: f64, h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(invalid(format!("Hölder exponent must lie in [0,1], got {nu}")));
    }
    if !(h > 0.0) {
        return Err(invalid(format!("Hölder constant must be positive, got {h}")));
    }
    if nu == 1.0 {
        return Ok(h / 2.0);
    }
    let ratio = ((1.0 + nu) / (1.0 - nu)).powf((1.0 - nu) / 2.0);
    Ok((h / (2.0 * ratio)).powf(2.0 / (1.0 + nu)))
}

pub(crate) fn check_start(problem: &CompositeProblem, x0: &Point) -> Result<()> {
    crate::error::check_dim(problem.dim(), x0.len())?;
    let scale = 1.0 + x0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !problem.set.contains(x0, 1e-9 * scale) {
        return Err(invalid("initial point lies outside the feasible set"));
    }
    Ok(())
}

/// `(1 − α) a + α b`.
pub(crate) fn blend(a: &Point, b: &Point, alpha: f64) -> Point {
    let mut out = a * (1.0 - alpha);
    out.scaled_add(alpha, b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn projected_gradient_examples() {
        let p = array![1.0, 2.0];
        assert_eq!(projected_gradient_norm_sq(&p, &p, 0.3), 0.0);
        assert_eq!(projected_gradient_norm_sq(&array![1.0, 0.0], &array![0.0, 0.0], 0.5), 4.0);
    }

    #[test]
    fn holder_examples() {
        assert_eq!(holder_constant(1.0, 2.0).unwrap(), 1.0);
        assert!((holder_constant(0.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((holder_constant(0.0, 3.0).unwrap() - 2.25).abs() < 1e-15);
        assert!((holder_constant(0.999, 2.0).unwrap() - 1.0).abs() < 1e-2);
        assert!(holder_constant(1.5, 1.0).is_err());
        assert!(holder_constant(0.5, 0.0).is_err());
    }

    #[test]
    fn holder_is_continuous_towards_one() {
        let mut prev = holder_constant(0.9, 4.0).unwrap();
        for nu in [0.99, 0.999, 0.9999, 0.99999] {
            let cur = holder_constant(nu, 4.0).unwrap();
            assert!((cur - 2.0).abs() <= (prev - 2.0).abs() + 1e-15);
            prev = cur;
        }
        assert!((prev - 2.0).abs() < 1e-3);
    }
}
