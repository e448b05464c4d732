//! Command-line and config-file parsing. Flags override file values, which
//! override built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;
use thiserror::Error;

/// Invalid arguments, or a help/version request when `informational` is set.
#[derive(Debug, Error, PartialEq)]
#[error("{message}")]
pub struct UsageError {
    pub message: String,
    pub informational: bool,
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError {
        message: msg.into(),
        informational: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Pg,
    Uag,
    Upfag,
    UpfagFull,
    Uapl,
    Ufapl,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Pg,
        Algorithm::Uag,
        Algorithm::Upfag,
        Algorithm::UpfagFull,
        Algorithm::Uapl,
        Algorithm::Ufapl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pg => "pg",
            Algorithm::Uag => "uag",
            Algorithm::Upfag => "upfag",
            Algorithm::UpfagFull => "upfag-full",
            Algorithm::Uapl => "uapl",
            Algorithm::Ufapl => "ufapl",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = UsageError;
    fn from_str(s: &str) -> Result<Self, UsageError> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| usage(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Scad,
    Svm,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Scad => "scad",
            ProblemKind::Svm => "svm",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = UsageError;
    fn from_str(s: &str) -> Result<Self, UsageError> {
        match s.trim() {
            "scad" => Ok(ProblemKind::Scad),
            "svm" => Ok(ProblemKind::Svm),
            _ => Err(usage(format!("unknown problem '{s}' (expected scad or svm)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = UsageError;
    fn from_str(s: &str) -> Result<Self, UsageError> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(usage(format!("unknown format '{s}' (expected csv or markdown)"))),
        }
    }
}

/// Solver parameter overrides accepted through `--set key=value` or the
/// config file.
pub const OVERRIDE_KEYS: [&str; 8] = [
    "lipschitz_scale",
    "upfag.gamma1",
    "upfag.gamma2",
    "upfag.delta",
    "level.eta",
    "level.theta",
    "level.max_inner",
    "level.max_cuts",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub problem: ProblemKind,
    pub algorithms: Vec<Algorithm>,
    pub m: usize,
    pub n: usize,
    pub instances: usize,
    pub seed: u64,
    /// Strictly decreasing.
    pub thresholds: Vec<f64>,
    pub max_iters: usize,
    pub time_limit_s: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub overrides: BTreeMap<String, f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Scad,
            algorithms: Algorithm::ALL.to_vec(),
            m: 100,
            n: 200,
            instances: 3,
            seed: 1,
            thresholds: vec![1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            max_iters: 5000,
            time_limit_s: None,
            output: None,
            format: Format::Markdown,
            overrides: BTreeMap::new(),
        }
    }
}

impl BenchConfig {
    pub fn override_or(&self, key: &str, default: f64) -> f64 {
        self.overrides.get(key).copied().unwrap_or(default)
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        if self.algorithms.is_empty() {
            return Err(usage("--algs: at least one algorithm is required"));
        }
        if self.m == 0 || self.n == 0 {
            return Err(usage("--m/--n: sizes must be positive"));
        }
        if self.instances == 0 {
            return Err(usage("--instances: must be >= 1"));
        }
        if self.max_iters == 0 {
            return Err(usage("--max-iters: must be >= 1"));
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(usage("--thresholds: need positive finite values"));
        }
        if self.thresholds.windows(2).any(|w| w[1] >= w[0]) {
            return Err(usage("--thresholds: values must be strictly decreasing"));
        }
        if let Some(t) = self.time_limit_s {
            if !(t > 0.0) {
                return Err(usage("--time-limit: must be positive"));
            }
        }
        Ok(())
    }
}

/// Benchmark the uniopt solvers on seeded synthetic instances.
#[derive(Debug, Parser)]
#[command(name = "uniopt-bench", version)]
struct Cli {
    /// Key=value file with any of the options below (long names, dashes or underscores).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem family: scad or svm [default: scad]
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated algorithms from pg,uag,upfag,upfag-full,uapl,ufapl [default: all]
    #[arg(long)]
    algs: Option<String>,
    /// Samples per instance [default: 100]
    #[arg(long)]
    m: Option<usize>,
    /// Dimension [default: 200]
    #[arg(long)]
    n: Option<usize>,
    /// Instances per run [default: 3]
    #[arg(long)]
    instances: Option<usize>,
    /// Base seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Strictly decreasing squared projected-gradient thresholds [default: 1e0,1e-1,...,1e-5]
    #[arg(long)]
    thresholds: Option<String>,
    /// Iteration cap per run [default: 5000]
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    /// Wall-clock cap per run in seconds
    #[arg(long = "time-limit")]
    time_limit: Option<f64>,
    /// Output file [default: stdout]
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or markdown [default: markdown]
    #[arg(long)]
    format: Option<String>,
    /// Solver override KEY=VALUE, repeatable; keys: lipschitz_scale, upfag.gamma1,
    /// upfag.gamma2, upfag.delta, level.eta, level.theta, level.max_inner, level.max_cuts
    #[arg(long = "set")]
    set: Vec<String>,
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, UsageError> {
    v.trim()
        .parse()
        .map_err(|_| usage(format!("--{key}: invalid value '{v}'")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, UsageError> {
    v.split(',').map(|s| parse_num(key, s)).collect()
}

fn parse_override(kv: &str) -> Result<(String, f64), UsageError> {
    let (k, v) = kv
        .split_once('=')
        .ok_or_else(|| usage(format!("--set: expected KEY=VALUE, got '{kv}'")))?;
    let k = k.trim();
    if !OVERRIDE_KEYS.contains(&k) {
        return Err(usage(format!("--set: unknown key '{k}'")));
    }
    Ok((k.to_string(), parse_num("set", v)?))
}

fn apply(cfg: &mut BenchConfig, key: &str, value: &str) -> Result<(), UsageError> {
    let key = key.trim().replace('_', "-");
    match key.as_str() {
        "problem" => cfg.problem = value.parse()?,
        "algs" | "algorithms" => cfg.algorithms = parse_list("algs", value)?,
        "m" => cfg.m = parse_num("m", value)?,
        "n" => cfg.n = parse_num("n", value)?,
        "instances" => cfg.instances = parse_num("instances", value)?,
        "seed" => cfg.seed = parse_num("seed", value)?,
        "thresholds" => cfg.thresholds = parse_list("thresholds", value)?,
        "max-iters" => cfg.max_iters = parse_num("max-iters", value)?,
        "time-limit" => cfg.time_limit_s = Some(parse_num("time-limit", value)?),
        "output" => cfg.output = Some(PathBuf::from(value.trim())),
        "format" => cfg.format = value.parse()?,
        _ => {
            // solver overrides keep their dotted, underscored names
            let raw = key.replace('-', "_");
            let (k, v) = parse_override(&format!("{raw}={value}"))
                .map_err(|_| usage(format!("config: unknown key '{raw}'")))?;
            cfg.overrides.insert(k, v);
        }
    }
    Ok(())
}

/// Parses a key=value config text. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str, cfg: &mut BenchConfig) -> Result<(), UsageError> {
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key = value", lineno + 1)))?;
        apply(cfg, k, v)?;
    }
    Ok(())
}

/// Builds a configuration from command-line arguments (program name first).
/// Help and version requests come back as a [`UsageError`] carrying the text.
pub fn parse_config<I, S>(args: I) -> Result<BenchConfig, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| UsageError {
        message: e.render().to_string(),
        informational: matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ),
    })?;
    let mut cfg = BenchConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("--config: cannot read {}: {e}", path.display())))?;
        parse_config_text(&text, &mut cfg)?;
    }
    let flags: [(&str, Option<String>); 11] = [
        ("problem", cli.problem),
        ("algs", cli.algs),
        ("m", cli.m.map(|v| v.to_string())),
        ("n", cli.n.map(|v| v.to_string())),
        ("instances", cli.instances.map(|v| v.to_string())),
        ("seed", cli.seed.map(|v| v.to_string())),
        ("thresholds", cli.thresholds),
        ("max-iters", cli.max_iters.map(|v| v.to_string())),
        ("time-limit", cli.time_limit.map(|v| v.to_string())),
        ("output", cli.output.map(|p| p.display().to_string())),
        ("format", cli.format),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            apply(&mut cfg, k, &v)?;
        }
    }
    for kv in &cli.set {
        let (k, v) = parse_override(kv)?;
        cfg.overrides.insert(k, v);
    }
    cfg.validate()?;
    Ok(cfg)
}
