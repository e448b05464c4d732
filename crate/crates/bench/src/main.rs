use std::process::ExitCode;

use uniopt_bench::{emit_report, parse_config, run_suite};

fn main() -> ExitCode {
    let cfg = match parse_config(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => {
            if e.informational {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", e.message.trim_end());
            return ExitCode::from(2);
        }
    };
    let result = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("suite failed: {e}");
            return ExitCode::from(1);
        }
    };
    for f in &result.failures {
        eprintln!("solver failure: {} on instance seed {}: {}", f.algorithm, f.instance_seed, f.message);
    }
    let text = match emit_report(&result, &cfg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("report: {e}");
            return ExitCode::from(1);
        }
    };
    match &cfg.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    if result.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
