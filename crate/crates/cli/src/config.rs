//! Flags, the flat `key = value` config file, and their validation.
//!
//! Every value is kept as text until both sources are merged, so file and
//! flag values go through the same parser and errors name the same field.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;
use heatcalc_core::exponent::ExponentConfig;
use heatcalc_core::linalg::parse_generator;
use heatcalc_core::multiplier::{HolderMultiplier, MultiplierFunction, LIBRARY_NAMES};
use heatcalc_core::restriction::log_grid;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    KernelConvergence,
    CalculusApprox,
    Density,
    RestrictionCheck,
    MultiplierBound,
    ContourVerify,
    SubordinationVerify,
    DispersiveChain,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::KernelConvergence,
        Command::CalculusApprox,
        Command::Density,
        Command::RestrictionCheck,
        Command::MultiplierBound,
        Command::ContourVerify,
        Command::SubordinationVerify,
        Command::DispersiveChain,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::KernelConvergence => "kernel-convergence",
            Command::CalculusApprox => "calculus-approx",
            Command::Density => "density",
            Command::RestrictionCheck => "restriction-check",
            Command::MultiplierBound => "multiplier-bound",
            Command::ContourVerify => "contour-verify",
            Command::SubordinationVerify => "subordination-verify",
            Command::DispersiveChain => "dispersive-chain",
        }
    }

    fn needs_operator(&self) -> bool {
        *self != Command::KernelConvergence
    }

    fn needs_d(&self) -> bool {
        matches!(self, Command::RestrictionCheck | Command::MultiplierBound | Command::DispersiveChain)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
            format!("unknown command `{s}`; valid: {}", names.join(", "))
        })
    }
}

/// Raw command line. Every field is optional so the config file can supply it.
#[derive(Debug, Default, Parser)]
#[command(name = "heatcalc", version, about = "Heat-semigroup calculus and bound experiments")]
struct Flags {
    #[arg(long)]
    command: Option<String>,
    /// Generator string: torus:n:d, path:n, fracpow:alpha:<inner>, diag:v1,v2,..., file:<path>
    #[arg(long)]
    operator: Option<String>,
    #[arg(long)]
    multiplier: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Integers: `2,5,9` or ranges `2..12`
    #[arg(long = "n-grid")]
    n_grid: Option<String>,
    /// Reals: `0.1,1,10`, `log:lo:hi:per_decade` or `lin:lo:hi:count`
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
    #[arg(long = "lambda-grid")]
    lambda_grid: Option<String>,
    #[arg(long = "s-grid")]
    s_grid: Option<String>,
    #[arg(long = "contour-nodes")]
    contour_nodes: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// CSV output path; the JSON summary goes next to it with a `.json` extension
    #[arg(long)]
    out: Option<String>,
    /// Flat `key = value` file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

const KEYS: [&str; 16] = [
    "command",
    "operator",
    "multiplier",
    "p",
    "d",
    "alpha",
    "gamma",
    "delta",
    "k",
    "n-grid",
    "t-grid",
    "lambda-grid",
    "s-grid",
    "contour-nodes",
    "seed",
    "out",
];

impl Flags {
    fn into_map(self) -> BTreeMap<&'static str, String> {
        let values = [
            self.command,
            self.operator,
            self.multiplier,
            self.p,
            self.d,
            self.alpha,
            self.gamma,
            self.delta,
            self.k,
            self.n_grid,
            self.t_grid,
            self.lambda_grid,
            self.s_grid,
            self.contour_nodes,
            self.seed,
            self.out,
        ];
        KEYS.into_iter().zip(values).filter_map(|(k, v)| v.map(|v| (k, v))).collect()
    }
}

/// Parses `key = value` lines; `#` starts a comment, `_` and `-` are interchangeable in keys.
pub fn parse_config_file(text: &str) -> CliResult<BTreeMap<&'static str, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::config("config", format!("line {}: expected `key = value`, got `{raw}`", i + 1)))?;
        let key = key.trim().replace('_', "-");
        let known = KEYS.into_iter().find(|k| *k == key).ok_or_else(|| {
            CliError::config(&key, format!("unknown key on line {}; valid keys: {}", i + 1, KEYS.join(", ")))
        })?;
        out.insert(known, value.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grids {
    pub n: Option<Vec<u32>>,
    pub t: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub s: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub operator: Option<String>,
    pub multiplier: Option<String>,
    pub p: f64,
    pub d: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub k: Option<u32>,
    pub grids: Grids,
    pub contour_nodes: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Merged key/value text, echoed into the JSON summary.
    pub echo: BTreeMap<&'static str, String>,
}

impl ExperimentConfig {
    /// Exponent pair, present whenever `d` is.
    pub fn exponents(&self) -> Option<ExponentConfig> {
        self.d.map(|d| ExponentConfig::new(self.p, d).expect("validated in parse_config"))
    }
}

/// Builds a config from `argv` (program name first) and the optional `--config` file.
pub fn parse_config<I, T>(argv: I) -> CliResult<ExperimentConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let flags = Flags::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Info(e.to_string()),
        _ => CliError::config("argv", e.to_string()),
    })?;
    let mut merged = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config("config", format!("cannot read `{}`: {e}", path.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    merged.extend(flags.into_map());
    from_map(merged)
}

fn real(field: &str, v: &str) -> CliResult<f64> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::config(field, format!("`{v}` is not a finite number")))
}

fn integer<T: FromStr>(field: &str, v: &str) -> CliResult<T> {
    v.trim().parse::<T>().map_err(|_| CliError::config(field, format!("`{v}` is not a non-negative integer")))
}

/// `2,5,9` and inclusive ranges `2..12`, mixed freely.
pub fn parse_int_grid(field: &str, v: &str) -> CliResult<Vec<u32>> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u32, u32) = (integer(field, a)?, integer(field, b)?);
                if a > b {
                    return Err(CliError::config(field, format!("empty range `{item}`")));
                }
                out.extend(a..=b);
            }
            None => out.push(integer(field, item)?),
        }
    }
    if out.is_empty() {
        return Err(CliError::config(field, "grid must be non-empty"));
    }
    Ok(out)
}

/// Comma lists of positive reals, `log:lo:hi:per_decade` or `lin:lo:hi:count`.
pub fn parse_real_grid(field: &str, v: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = v.trim().split(':').collect();
    let out = match parts.as_slice() {
        ["log", lo, hi, per] => {
            let (lo, hi, per) = (real(field, lo)?, real(field, hi)?, integer::<usize>(field, per)?);
            if !(lo > 0.0 && hi > lo && per > 0) {
                return Err(CliError::config(field, format!("log grid needs 0 < lo < hi and per_decade > 0, got `{v}`")));
            }
            log_grid(lo, hi, per)
        }
        ["lin", lo, hi, count] => {
            let (lo, hi, count) = (real(field, lo)?, real(field, hi)?, integer::<usize>(field, count)?);
            if !(hi > lo && count >= 2) {
                return Err(CliError::config(field, format!("lin grid needs lo < hi and count >= 2, got `{v}`")));
            }
            (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
        }
        _ => v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| real(field, s)).collect::<CliResult<_>>()?,
    };
    if out.is_empty() {
        return Err(CliError::config(field, "grid must be non-empty"));
    }
    if let Some(bad) = out.iter().find(|x| !(**x > 0.0)) {
        return Err(CliError::config(field, format!("grid values must be positive, got {bad}")));
    }
    Ok(out)
}

fn from_map(map: BTreeMap<&'static str, String>) -> CliResult<ExperimentConfig> {
    let get = |k: &str| map.get(k).map(String::as_str);
    let command: Command = get("command")
        .ok_or_else(|| CliError::config("command", "missing; pass --command"))?
        .parse()
        .map_err(|e: String| CliError::config("command", e))?;

    let operator = get("operator").map(str::to_string);
    match &operator {
        Some(op) => {
            parse_generator(op).map_err(|e| CliError::config("operator", e.to_string()))?;
        }
        None if command.needs_operator() => {
            return Err(CliError::config("operator", format!("required by `{command}`")));
        }
        None => {}
    }

    let multiplier = get("multiplier").map(str::to_string);
    if let Some(m) = &multiplier {
        let ok = match command {
            Command::MultiplierBound => MultiplierFunction::by_name(m).map(|_| ()),
            _ => HolderMultiplier::by_name(m).map(|_| ()),
        };
        ok.map_err(|e| CliError::config("multiplier", format!("{e}; valid options: {LIBRARY_NAMES}")))?;
    } else if command == Command::MultiplierBound {
        return Err(CliError::config("multiplier", "required by `multiplier-bound` (indicator:a:b or bump:a:b)"));
    }

    let p = get("p").map(|v| real("p", v)).transpose()?.unwrap_or(1.0);
    if !(1.0..2.0).contains(&p) {
        return Err(CliError::config("p", format!("p must lie in [1, 2), got {p}")));
    }
    let d = get("d").map(|v| real("d", v)).transpose()?;
    match d {
        Some(d) => {
            ExponentConfig::new(p, d).map_err(|e| CliError::config("d", e.to_string()))?;
        }
        None if command.needs_d() => return Err(CliError::config("d", format!("required by `{command}`"))),
        None => {}
    }

    let alpha = get("alpha").map(|v| real("alpha", v)).transpose()?;
    if let Some(a) = alpha.filter(|a| !(*a > 0.0)) {
        return Err(CliError::config("alpha", format!("alpha must be positive, got {a}")));
    }
    let gamma = get("gamma").map(|v| real("gamma", v)).transpose()?;
    if let Some(g) = gamma.filter(|g| !(*g > 0.0)) {
        return Err(CliError::config("gamma", format!("gamma must be positive, got {g}")));
    }
    let delta = get("delta").map(|v| real("delta", v)).transpose()?;
    if let Some(x) = delta.filter(|x| !(*x > 0.0 && *x <= 1.0)) {
        return Err(CliError::config("delta", format!("delta must lie in (0, 1], got {x}")));
    }
    let k = get("k").map(|v| integer::<u32>("k", v)).transpose()?;

    let grids = Grids {
        n: get("n-grid").map(|v| parse_int_grid("n-grid", v)).transpose()?,
        t: get("t-grid").map(|v| parse_real_grid("t-grid", v)).transpose()?,
        lambda: get("lambda-grid").map(|v| parse_real_grid("lambda-grid", v)).transpose()?,
        s: get("s-grid").map(|v| parse_real_grid("s-grid", v)).transpose()?,
    };
    let contour_nodes = get("contour-nodes")
        .map(|v| integer::<usize>("contour-nodes", v))
        .transpose()?
        .unwrap_or(heatcalc_core::dispersive::DEFAULT_CONTOUR_NODES);
    if contour_nodes < 8 {
        return Err(CliError::config("contour-nodes", format!("need at least 8 nodes, got {contour_nodes}")));
    }
    let seed = get("seed").map(|v| integer::<u64>("seed", v)).transpose()?.unwrap_or(0);
    let out = PathBuf::from(get("out").map(str::to_string).unwrap_or_else(|| format!("{command}.csv")));

    Ok(ExperimentConfig {
        command,
        operator,
        multiplier,
        p,
        d,
        alpha,
        gamma,
        delta,
        k,
        grids,
        contour_nodes,
        seed,
        out,
        echo: map,
    })
}
