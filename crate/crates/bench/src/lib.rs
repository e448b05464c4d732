//! Benchmark harness: runs the uniopt solvers on seeded SCAD and sigmoid-SVM
//! instances, records first crossings of squared projected-gradient
//! thresholds, and renders averaged tables.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod suite;

pub use config::{parse_config, parse_config_text, Algorithm, BenchConfig, Format, ProblemKind, UsageError};
pub use report::{parse_csv, to_csv, to_markdown, ReportError, ReportMeta};
pub use suite::{instance_seed, run_suite, Outcome, SolverFailure, SuiteResult, ThresholdRecord};

/// Renders `result` in the requested format.
pub fn emit_report(result: &SuiteResult, cfg: &BenchConfig) -> Result<String, ReportError> {
    match cfg.format {
        Format::Csv => to_csv(&result.records),
        Format::Markdown => to_markdown(
            &result.records,
            &ReportMeta {
                max_iters: cfg.max_iters,
                lipschitz: result.lipschitz.clone(),
            },
        ),
    }
}
