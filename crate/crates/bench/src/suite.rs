//! Seeded suite execution and per-threshold aggregation.

use std::time::Duration;

use rayon::prelude::*;
use uniopt::accel::{run_pg, run_uag, run_upfag, InitPolicy, UagParams, UpfagParams};
use uniopt::level::{run_uapl, run_ufapl, LevelParams};
use uniopt::testbed::{gen_scad_instance, gen_svm_instance, random_point_in_ball, ScadInstance, SvmInstance};
use uniopt::{CompositeProblem, Point, RunTrace, StoppingRule};

use crate::config::{Algorithm, BenchConfig, ProblemKind};

/// Aggregate over instances for one algorithm and threshold. Means are taken
/// over the instances that crossed the threshold and are `None` when none did.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRecord {
    pub problem: String,
    pub m: usize,
    pub n: usize,
    pub algorithm: String,
    pub threshold: f64,
    pub mean_iters: Option<f64>,
    pub mean_seconds: Option<f64>,
    pub mean_obj: Option<f64>,
    /// Holdout classification error, SVM only.
    pub mean_er: Option<f64>,
    pub failures: usize,
}

/// First crossing of one threshold on one instance. `iters` is `None` when
/// the run ended before crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub instance: usize,
    pub instance_seed: u64,
    pub algorithm: Algorithm,
    pub threshold: f64,
    pub iters: Option<usize>,
    pub seconds: Option<f64>,
    pub obj: Option<f64>,
    pub er: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverFailure {
    pub instance_seed: u64,
    pub algorithm: Algorithm,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub records: Vec<ThresholdRecord>,
    pub outcomes: Vec<Outcome>,
    /// `(instance seed, L estimate)` per instance.
    pub lipschitz: Vec<(u64, f64)>,
    pub failures: Vec<SolverFailure>,
}

impl SuiteResult {
    pub fn outcome(&self, instance: usize, algorithm: Algorithm, threshold: f64) -> Option<&Outcome> {
        self.outcomes
            .iter()
            .find(|o| o.instance == instance && o.algorithm == algorithm && o.threshold == threshold)
    }
}

/// Seed of instance `i`. Distinct instances under one base seed never share
/// a seed.
pub fn instance_seed(base: u64, i: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(i as u64)
}

enum Generated {
    Scad(ScadInstance),
    Svm(SvmInstance),
}

impl Generated {
    fn new(kind: ProblemKind, m: usize, n: usize, seed: u64) -> uniopt::Result<Self> {
        Ok(match kind {
            ProblemKind::Scad => Generated::Scad(gen_scad_instance(m, n, seed)?),
            ProblemKind::Svm => Generated::Svm(gen_svm_instance(m, n, seed)?),
        })
    }

    fn problem(&self) -> CompositeProblem {
        match self {
            Generated::Scad(s) => s.problem(),
            Generated::Svm(s) => s.problem(),
        }
    }

    fn lipschitz(&self) -> f64 {
        match self {
            Generated::Scad(s) => s.lipschitz,
            Generated::Svm(s) => s.lipschitz,
        }
    }

    fn start(&self, seed: u64) -> Point {
        match self {
            Generated::Scad(s) => Point::zeros(s.n),
            Generated::Svm(s) => random_point_in_ball(&Point::zeros(s.n), s.radius, seed),
        }
    }

    fn error_rate(&self, x: &Point) -> Option<f64> {
        match self {
            Generated::Scad(_) => None,
            Generated::Svm(s) => Some(s.classification_error(x)),
        }
    }
}

fn solve(
    alg: Algorithm,
    problem: &CompositeProblem,
    x0: &Point,
    lipschitz: f64,
    cfg: &BenchConfig,
    stop: &StoppingRule,
) -> uniopt::Result<RunTrace> {
    let l = lipschitz * cfg.override_or("lipschitz_scale", 1.0);
    let upfag = |init| {
        let mut p = UpfagParams::default().with_init(init, 1.0 / l, 1.0 / l);
        p.gamma1 = cfg.override_or("upfag.gamma1", p.gamma1);
        p.gamma2 = cfg.override_or("upfag.gamma2", p.gamma2);
        p.delta = cfg.override_or("upfag.delta", p.delta);
        p
    };
    let level = || {
        let d = LevelParams::default();
        LevelParams {
            eta: cfg.override_or("level.eta", d.eta),
            theta: cfg.override_or("level.theta", d.theta),
            max_inner: cfg.override_or("level.max_inner", d.max_inner as f64) as usize,
            max_cuts: cfg.override_or("level.max_cuts", d.max_cuts as f64) as usize,
            initial_beta: 1.0 / l,
            ..d
        }
    };
    match alg {
        Algorithm::Pg => run_pg(problem, x0, l, stop),
        Algorithm::Uag => run_uag(problem, x0, &UagParams::new(l)?, stop),
        Algorithm::Upfag => run_upfag(problem, x0, &upfag(InitPolicy::WarmStart), stop),
        Algorithm::UpfagFull => run_upfag(problem, x0, &upfag(InitPolicy::Bb), stop),
        Algorithm::Uapl => run_uapl(problem, x0, &level(), stop).map(|r| r.trace),
        Algorithm::Ufapl => run_ufapl(problem, x0, &level(), stop).map(|r| r.trace),
    }
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (c > 0).then(|| s / c as f64)
}

/// Runs every (instance, algorithm) pair and aggregates first crossings.
/// A solver error is recorded and counted as a failure at every threshold.
pub fn run_suite(cfg: &BenchConfig) -> uniopt::Result<SuiteResult> {
    let seeds: Vec<u64> = (0..cfg.instances).map(|i| instance_seed(cfg.seed, i)).collect();
    let instances = seeds
        .par_iter()
        .map(|&s| Generated::new(cfg.problem, cfg.m, cfg.n, s))
        .collect::<uniopt::Result<Vec<_>>>()?;
    let min_thr = cfg.thresholds.iter().copied().fold(f64::INFINITY, f64::min);
    let mut stop = StoppingRule::iterations(cfg.max_iters)
        .with_grad_tol(min_thr)
        .with_capture(cfg.thresholds.clone());
    if let Some(t) = cfg.time_limit_s {
        stop = stop.with_time_limit(Duration::from_secs_f64(t));
    }

    let jobs: Vec<(usize, Algorithm)> = (0..instances.len())
        .flat_map(|i| cfg.algorithms.iter().map(move |&a| (i, a)))
        .collect();
    let runs: Vec<(usize, Algorithm, Result<Vec<Outcome>, String>)> = jobs
        .par_iter()
        .map(|&(i, alg)| {
            let inst = &instances[i];
            let x0 = inst.start(seeds[i]);
            let res = solve(alg, &inst.problem(), &x0, inst.lipschitz(), cfg, &stop)
                .map(|trace| {
                    cfg.thresholds
                        .iter()
                        .map(|&thr| {
                            let c = trace.crossings.iter().find(|c| c.threshold == thr);
                            Outcome {
                                instance: i,
                                instance_seed: seeds[i],
                                algorithm: alg,
                                threshold: thr,
                                iters: c.map(|c| c.k),
                                seconds: c.map(|c| c.elapsed),
                                obj: c.map(|c| c.value),
                                er: c.and_then(|c| inst.error_rate(&c.point)),
                            }
                        })
                        .collect()
                })
                .map_err(|e| e.to_string());
            (i, alg, res)
        })
        .collect();

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (i, alg, res) in runs {
        match res {
            Ok(o) => outcomes.extend(o),
            Err(message) => {
                failures.push(SolverFailure {
                    instance_seed: seeds[i],
                    algorithm: alg,
                    message,
                });
                outcomes.extend(cfg.thresholds.iter().map(|&thr| Outcome {
                    instance: i,
                    instance_seed: seeds[i],
                    algorithm: alg,
                    threshold: thr,
                    iters: None,
                    seconds: None,
                    obj: None,
                    er: None,
                }));
            }
        }
    }

    let mut records = Vec::new();
    for &alg in &cfg.algorithms {
        for &thr in &cfg.thresholds {
            let hits: Vec<&Outcome> = outcomes
                .iter()
                .filter(|o| o.algorithm == alg && o.threshold == thr && o.iters.is_some())
                .collect();
            records.push(ThresholdRecord {
                problem: cfg.problem.name().to_string(),
                m: cfg.m,
                n: cfg.n,
                algorithm: alg.name().to_string(),
                threshold: thr,
                mean_iters: mean(hits.iter().filter_map(|o| o.iters.map(|k| k as f64))),
                mean_seconds: mean(hits.iter().filter_map(|o| o.seconds)),
                mean_obj: mean(hits.iter().filter_map(|o| o.obj)),
                mean_er: mean(hits.iter().filter_map(|o| o.er)),
                failures: cfg.instances - hits.len(),
            });
        }
    }
    Ok(SuiteResult {
        records,
        outcomes,
        lipschitz: seeds.iter().zip(&instances).map(|(s, g)| (*s, g.lipschitz())).collect(),
        failures,
    })
}
