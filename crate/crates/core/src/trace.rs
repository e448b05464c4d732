//! Per-run records shared by all solvers.

use std::time::{Duration, Instant};

use crate::error::{invalid, Result};
use crate::problem::Point;

/// When a run stops. The gradient criterion applies to the minimum over all
/// iterations of the squared projected-gradient norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRule {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub time_limit: Option<Duration>,
    /// Bundle-level methods only: stop once the gap `Ψ̄ − lb` at a phase
    /// boundary falls to this value.
    pub gap_tol: Option<f64>,
    /// Thresholds at which the current iterate is captured, in any order.
    pub capture: Vec<f64>,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iters: 1000,
            time_limit: None,
            gap_tol: None,
            capture: Vec::new(),
        }
    }
}

impl StoppingRule {
    pub fn iterations(max_iters: usize) -> Self {
        Self {
            grad_tol: 0.0,
            max_iters,
            ..Self::default()
        }
    }

    pub fn with_grad_tol(mut self, tol: f64) -> Self {
        self.grad_tol = tol;
        self
    }

    pub fn with_gap_tol(mut self, tol: f64) -> Self {
        self.gap_tol = Some(tol);
        self
    }

    pub fn with_capture(mut self, thresholds: Vec<f64>) -> Self {
        self.capture = thresholds;
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.grad_tol >= 0.0) {
            return Err(invalid("gradient tolerance must be >= 0"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be >= 1"));
        }
        Ok(())
    }
}

/// One iteration of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    /// `Ψ(x^{ag}_k)`.
    pub value: f64,
    /// `‖(x^{ag}_{k−1} − x̄^{ag}_k)/β_k‖²`.
    pub grad_norm_sq: f64,
    pub min_grad_norm_sq: f64,
    pub alpha: Option<f64>,
    /// Accepted `η_k` of the λ line search.
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub beta: f64,
    pub tau1: usize,
    pub tau2: usize,
    /// `Ψ(x̄^{ag}_k)` and `Ψ(x̃^{ag}_k)` when computed.
    pub descent_value: Option<f64>,
    pub aggregate_value: Option<f64>,
    /// Current lower bound (bundle-level methods).
    pub lower_bound: Option<f64>,
    pub oracle_calls: u64,
    pub elapsed: f64,
}

impl IterRecord {
    pub(crate) fn new(k: usize, value: f64, grad_norm_sq: f64, beta: f64) -> Self {
        Self {
            k,
            value,
            grad_norm_sq,
            min_grad_norm_sq: grad_norm_sq,
            alpha: None,
            eta: None,
            lambda: None,
            beta,
            tau1: 0,
            tau2: 0,
            descent_value: None,
            aggregate_value: None,
            lower_bound: None,
            oracle_calls: 0,
            elapsed: 0.0,
        }
    }
}

/// Iterate captured the first time the running minimum of the squared
/// projected gradient fell to a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub threshold: f64,
    pub k: usize,
    pub value: f64,
    pub elapsed: f64,
    pub point: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradTol,
    GapTol,
    MaxIters,
    MaxPhases,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algorithm: &'static str,
    pub initial_point: Point,
    pub initial_value: f64,
    pub iterations: Vec<IterRecord>,
    pub final_point: Point,
    pub final_value: f64,
    pub min_grad_norm_sq: f64,
    pub crossings: Vec<Crossing>,
    pub termination: Termination,
    pub oracle_calls: u64,
    pub elapsed: f64,
}

impl RunTrace {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.initial_value).chain(self.iterations.iter().map(|r| r.value))
    }

    /// Lowest objective value observed (initial point included).
    pub fn best_value(&self) -> f64 {
        self.values().fold(f64::INFINITY, f64::min)
    }

    /// First iteration whose running minimum is at or below `threshold`.
    pub fn first_crossing(&self, threshold: f64) -> Option<&IterRecord> {
        self.iterations.iter().find(|r| r.min_grad_norm_sq <= threshold)
    }
}

/// Assembles a [`RunTrace`] and decides when to stop.
pub(crate) struct Recorder {
    algorithm: &'static str,
    start: Instant,
    stop: StoppingRule,
    pending: Vec<f64>,
    initial_point: Point,
    initial_value: f64,
    iterations: Vec<IterRecord>,
    crossings: Vec<Crossing>,
    min_grad: f64,
}

impl Recorder {
    pub(crate) fn new(
        algorithm: &'static str,
        stop: &StoppingRule,
        x0: &Point,
        value0: f64,
    ) -> Result<Self> {
        stop.validate()?;
        let mut pending = stop.capture.clone();
        pending.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            algorithm,
            start: Instant::now(),
            stop: stop.clone(),
            pending,
            initial_point: x0.clone(),
            initial_value: value0,
            iterations: Vec::new(),
            crossings: Vec::new(),
            min_grad: f64::INFINITY,
        })
    }

    /// Records an iteration with current iterate `x_ag` and returns a reason
    /// to stop, if any.
    pub(crate) fn push(&mut self, mut rec: IterRecord, calls: u64, x_ag: &Point) -> Option<Termination> {
        self.min_grad = self.min_grad.min(rec.grad_norm_sq);
        rec.min_grad_norm_sq = self.min_grad;
        rec.oracle_calls = calls;
        rec.elapsed = self.start.elapsed().as_secs_f64();
        while let Some(&thr) = self.pending.first() {
            if self.min_grad <= thr {
                self.crossings.push(Crossing {
                    threshold: thr,
                    k: rec.k,
                    value: rec.value,
                    elapsed: rec.elapsed,
                    point: x_ag.clone(),
                });
                self.pending.remove(0);
            } else {
                break;
            }
        }
        let k = rec.k;
        self.iterations.push(rec);
        if self.min_grad <= self.stop.grad_tol {
            Some(Termination::GradTol)
        } else if k >= self.stop.max_iters {
            Some(Termination::MaxIters)
        } else if self
            .stop
            .time_limit
            .is_some_and(|t| self.start.elapsed() >= t)
        {
            Some(Termination::TimeLimit)
        } else {
            None
        }
    }

    pub(crate) fn gap_reached(&self, gap: f64) -> bool {
        self.stop.gap_tol.is_some_and(|tol| gap <= tol)
    }

    pub(crate) fn finish(
        self,
        termination: Termination,
        final_point: Point,
        final_value: f64,
        calls: u64,
    ) -> RunTrace {
        RunTrace {
            algorithm: self.algorithm,
            initial_point: self.initial_point,
            initial_value: self.initial_value,
            iterations: self.iterations,
            final_point,
            final_value,
            min_grad_norm_sq: self.min_grad,
            crossings: self.crossings,
            termination,
            oracle_calls: calls,
            elapsed: self.start.elapsed().as_secs_f64(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn recorder_tracks_min_and_crossings() {
        let stop = StoppingRule::iterations(10)
            .with_grad_tol(1e-3)
            .with_capture(vec![1e-2, 1.0, 1e-1]);
        let x = array![0.0];
        let mut r = Recorder::new("t", &stop, &x, 5.0).unwrap();
        assert_eq!(r.push(IterRecord::new(1, 4.0, 0.5, 1.0), 1, &x), None);
        assert_eq!(r.push(IterRecord::new(2, 3.0, 2.0, 1.0), 2, &x), None);
        assert_eq!(r.push(IterRecord::new(3, 2.0, 0.005, 1.0), 3, &x), None);
        assert_eq!(
            r.push(IterRecord::new(4, 1.0, 1e-4, 1.0), 4, &x),
            Some(Termination::GradTol)
        );
        let t = r.finish(Termination::GradTol, x.clone(), 1.0, 4);
        let ks: Vec<(f64, usize)> = t.crossings.iter().map(|c| (c.threshold, c.k)).collect();
        assert_eq!(ks, vec![(1.0, 1), (1e-1, 3), (1e-2, 3)]);
        assert_eq!(t.iterations[1].min_grad_norm_sq, 0.5);
        assert_eq!(t.first_crossing(0.1).unwrap().k, 3);
        assert_eq!(t.best_value(), 1.0);
    }

    #[test]
    fn max_iters_stops() {
        let stop = StoppingRule::iterations(2);
        let x = array![0.0];
        let mut r = Recorder::new("t", &stop, &x, 1.0).unwrap();
        assert_eq!(r.push(IterRecord::new(1, 1.0, 1.0, 1.0), 1, &x), None);
        assert_eq!(
            r.push(IterRecord::new(2, 1.0, 1.0, 1.0), 2, &x),
            Some(Termination::MaxIters)
        );
        assert!(Recorder::new("t", &StoppingRule::iterations(0), &x, 1.0).is_err());
    }
}
