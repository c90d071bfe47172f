//! Command execution. Each command yields CSV bytes and JSON summary fields;
//! writing files is a separate step so tests can run commands in memory.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use heatcalc_core::calculus::{
    calculus_report, density_trace, CalculusOptions, CALCULUS_CSV_HEADER,
};
use heatcalc_core::dispersive::{
    contour_power_detailed, derivative_dispersive_check, dispersive_ratio, power_oracle,
    proposition2_bound_check, spectral_derivative_bound_check, subordinated_fractional,
    subordination_oracle, ContourSpec, DispersiveConfig,
};
use heatcalc_core::exponent::ExponentConfig;
use heatcalc_core::gamma_kernel::{mu_n, DeltaForm, GammaKernel, MAX_DENSITY_ORDER};
use heatcalc_core::linalg::{eigendecompose, parse_generator, BoydOptions, SymmetricOperator};
use heatcalc_core::multiplier::{HolderMultiplier, MultiplierFunction};
use heatcalc_core::quadrature::QuadratureSpec;
use heatcalc_core::report::{write_bound_csv, BoundReport};
use heatcalc_core::restriction::{
    check_derivative_bound, default_n_grid, default_t_grid, dyadic_lambda_grid,
    fractional_rescale_check, log_grid, multiplier_norm_bound, restriction_band_check, EpsRule,
    NormMode,
};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::{Command, ExperimentConfig};
use crate::error::{CliError, CliResult};

/// Result of one command before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub csv: Vec<u8>,
    /// Summary fields; `run` adds the command, config echo and wall time.
    pub summary: Map<String, Value>,
}

/// Paths written by `run`.
#[derive(Debug, Clone)]
pub struct Written {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub summary: Value,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Plain table with the same conventions as the bound reports: LF endings, 17 significant digits.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> Vec<u8> {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out.into_bytes()
    }
}

fn operator(cfg: &ExperimentConfig) -> CliResult<SymmetricOperator> {
    let spec = cfg.operator.as_deref().ok_or_else(|| CliError::config("operator", "required"))?;
    parse_generator(spec).map_err(|e| CliError::config("operator", e.to_string()))
}

fn holder(cfg: &ExperimentConfig) -> CliResult<HolderMultiplier> {
    let name = cfg.multiplier.as_deref().unwrap_or("cauchy");
    HolderMultiplier::by_name(name).map_err(|e| CliError::config("multiplier", e.to_string()))
}

fn exponents(cfg: &ExperimentConfig) -> CliResult<ExponentConfig> {
    cfg.exponents().ok_or_else(|| CliError::config("d", format!("required by `{}`", cfg.command)))
}

/// Exact norms at `p = 1`, seeded power iteration otherwise.
fn norm_mode(cfg: &ExperimentConfig) -> NormMode {
    if cfg.p == 1.0 {
        NormMode::Exact
    } else {
        NormMode::Boyd(BoydOptions { seed: cfg.seed, ..BoydOptions::default() })
    }
}

fn bound_outcome(reports: &[BoundReport], mut summary: Map<String, Value>) -> CliResult<Outcome> {
    let mut csv = Vec::new();
    write_bound_csv(reports, &mut csv)?;
    if let Some(first) = reports.first() {
        summary.insert("supRatio".into(), json!(first.sup_ratio()));
    }
    let per: Map<String, Value> = reports
        .iter()
        .map(|r| {
            (
                r.assertion.clone(),
                json!({ "supRatio": r.sup_ratio(), "rows": r.rows.len(), "grid": r.grid, "flags": r.flags }),
            )
        })
        .collect();
    summary.insert("reports".into(), Value::Object(per));
    Ok(Outcome { csv, summary })
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn kernel_convergence(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let phi = holder(cfg)?;
    let ns = cfg.grids.n.clone().unwrap_or_else(|| vec![16, 64, 256, 1024]);
    let lambdas = cfg.grids.lambda.clone().unwrap_or_else(|| vec![1.0]);
    let spec = QuadratureSpec::default();
    let mut t = Table::new(&["N", "lambda", "mu_N", "phi", "abs_error"]);
    let mut errors = Vec::new();
    for &n in &ns {
        for &l in &lambdas {
            let mu = mu_n(phi.func().as_ref(), n, l, &spec)?;
            let exact = phi.eval(l);
            errors.push((mu - exact).abs());
            t.push(vec![n.to_string(), fmt(l), fmt(mu), fmt(exact), fmt((mu - exact).abs())]);
        }
    }
    let mut summary = Map::new();
    summary.insert("max_error".into(), json!(max_of(errors.iter().copied())));
    summary.insert("final_max_error".into(), json!(max_of(errors[errors.len() - lambdas.len()..].iter().copied())));
    Ok(Outcome { csv: t.to_csv(), summary })
}

fn calculus_approx(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let h = operator(cfg)?;
    let phi = holder(cfg)?;
    let mut ns = cfg.grids.n.clone().unwrap_or_else(|| vec![16, 64, 256]);
    ns.sort_unstable();
    ns.dedup();
    let spectrum = eigendecompose(&h)?;
    let opts = CalculusOptions::default();
    let mut t = Table::new(&CALCULUS_CSV_HEADER);
    let mut reports = Vec::new();
    for &n in &ns {
        let (kernel, delta) = match cfg.delta {
            Some(delta) => (GammaKernel::with_delta(n, delta, DeltaForm::A)?, delta),
            None => (GammaKernel::theorem(n)?, 1.0),
        };
        let r = calculus_report(&h, &spectrum, &kernel, n, delta, &phi, &opts)?;
        t.push(r.csv_record());
        reports.push(r);
    }
    let last = reports.last().expect("non-empty grid");
    let mut summary = Map::new();
    summary.insert("max_error".into(), json!(max_of(reports.iter().map(|r| r.approx_error_2))));
    summary.insert("final_error_2".into(), json!(last.approx_error_2));
    summary.insert("final_scalar_sup_error".into(), json!(last.scalar_sup_error));
    summary.insert("kernel_corrected".into(), json!(last.kernel_corrected));
    Ok(Outcome { csv: t.to_csv(), summary })
}

fn density(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let h = operator(cfg)?;
    let spectrum = eigendecompose(&h)?;
    let n = cfg.grids.n.as_ref().map_or(200, |g| g[0]);
    let k = cfg.k.unwrap_or(0);
    if k > MAX_DENSITY_ORDER {
        return Err(CliError::config("k", format!("density order must be at most {MAX_DENSITY_ORDER}, got {k}")));
    }
    // log-spaced by default: the kernel width scales like lambda / sqrt(N)
    let top = 2.0 * spectrum.lambda_max().max(1e-12);
    let bottom = 0.25 * spectrum.lambda_min_positive().unwrap_or(top / 2.0);
    let lambdas = cfg.grids.lambda.clone().unwrap_or_else(|| log_grid(bottom, top, 200));
    let mut t = Table::new(&["lambda", "N", "k", "trace"]);
    let mut traces = Vec::with_capacity(lambdas.len());
    for &l in &lambdas {
        let tr = density_trace(&spectrum, l, n, k)?;
        traces.push(tr);
        t.push(vec![fmt(l), n.to_string(), k.to_string(), fmt(tr)]);
    }
    // trapezoid over the grid, from lambda = 0 where every trace vanishes
    let mut integral = 0.5 * lambdas[0] * traces[0];
    for i in 1..lambdas.len() {
        integral += 0.5 * (lambdas[i] - lambdas[i - 1]) * (traces[i] + traces[i - 1]);
    }
    let mut summary = Map::new();
    summary.insert("trace_integral".into(), json!(integral));
    summary.insert("positive_eigenvalues".into(), json!(spectrum.dim() - spectrum.kernel_dim()));
    Ok(Outcome { csv: t.to_csv(), summary })
}

fn restriction_check(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let h = operator(cfg)?;
    let ec = exponents(cfg)?;
    let mode = norm_mode(cfg);
    let ns = cfg.grids.n.clone().unwrap_or_else(default_n_grid);
    if ns.contains(&0) {
        return Err(CliError::config("n-grid", "N must be at least 1"));
    }
    let ts = cfg.grids.t.clone().unwrap_or_else(default_t_grid);
    let mut reports = vec![check_derivative_bound(&h, &ec, &ns, &ts, &mode)?];
    if let Some(lambdas) = &cfg.grids.lambda {
        reports.push(restriction_band_check(&h, &ec, lambdas, EpsRule::default(), &mode)?);
    }
    if let Some(alpha) = cfg.alpha {
        let lambdas = match &cfg.grids.lambda {
            Some(l) => l.clone(),
            None => dyadic_lambda_grid(&eigendecompose(&h)?),
        };
        reports.push(fractional_rescale_check(&h, alpha, &ec, &lambdas, EpsRule::default(), &mode)?);
    }
    let mut summary = Map::new();
    summary.insert("lower_bound".into(), json!(mode.is_lower_bound(&ec)));
    bound_outcome(&reports, summary)
}

fn multiplier_bound(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let h = operator(cfg)?;
    let ec = exponents(cfg)?;
    let name = cfg.multiplier.as_deref().ok_or_else(|| CliError::config("multiplier", "required"))?;
    let f = MultiplierFunction::by_name(name).map_err(|e| CliError::config("multiplier", e.to_string()))?;
    let mode = norm_mode(cfg);
    let b = multiplier_norm_bound(&h, &f, &ec, &mode)?;
    let mut rep = BoundReport::new("RESF", h.label(), &ec, format!("multiplier {}", f.label()));
    rep.push(("R", f.support_r()), ("mass", f.integral_ds_over_s()), b.ratio);
    if b.vacuous {
        rep.flags.push("vacuous: infinite ds/s mass, ratio reported as 0".into());
    }
    let mut summary = Map::new();
    summary.insert("lhs".into(), json!(b.lhs));
    summary.insert("rhs".into(), if b.rhs.is_finite() { json!(b.rhs) } else { json!("inf") });
    summary.insert("vacuous".into(), json!(b.vacuous));
    bound_outcome(&[rep], summary)
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 { diff / scale } else { diff }
}

fn contour_verify(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let h = operator(cfg)?;
    let spectrum = eigendecompose(&h)?;
    let gamma = cfg.gamma.unwrap_or(1.0);
    let ns = cfg.grids.n.clone().unwrap_or_else(|| (2..=12).collect());
    let ss = cfg.grids.s.clone().unwrap_or_else(|| vec![0.25]);
    let mut t = Table::new(&["N", "s", "gamma", "nodes", "residue", "rel_error"]);
    let mut errors = Vec::new();
    for &n in &ns {
        let spec = ContourSpec::new(n, cfg.contour_nodes).map_err(|e| CliError::config("n-grid", e.to_string()))?;
        for &s in &ss {
            let c = contour_power_detailed(&h, &spectrum, s, &spec, gamma, gamma.ceil() as u32 + 1)?;
            let want = power_oracle(&spectrum, n, s, gamma)?;
            let err = relative((&c.matrix - &want).norm(), want.norm());
            errors.push(err);
            t.push(vec![n.to_string(), fmt(s), fmt(gamma), c.nodes.to_string(), fmt(c.residue), fmt(err)]);
        }
    }
    let mut summary = Map::new();
    summary.insert("max_error".into(), json!(max_of(errors)));
    Ok(Outcome { csv: t.to_csv(), summary })
}

/// Imaginary part of the `zeta` grid used by `subordination-verify`.
pub const SUBORDINATION_ZETA_IM: f64 = 0.5;
pub const SUBORDINATION_ZETA_RE: [f64; 3] = [1.0, 2.0, 5.0];

fn subordination_verify(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let h = operator(cfg)?;
    let spectrum = eigendecompose(&h)?;
    let gammas = cfg.gamma.map_or_else(|| vec![0.25, 0.5, 0.75], |g| vec![g]);
    let ks = cfg.k.map_or_else(|| vec![1, 2, 3], |k| vec![k]);
    let ss = cfg.grids.s.clone().unwrap_or_else(|| vec![0.5]);
    let mut t = Table::new(&["gamma", "k", "zeta_re", "zeta_im", "s", "rel_error"]);
    let mut errors = Vec::new();
    for &g in &gammas {
        for &k in ks.iter().filter(|&&k| k as f64 > g) {
            for &re in &SUBORDINATION_ZETA_RE {
                let z = Complex64::new(re, SUBORDINATION_ZETA_IM);
                for &s in &ss {
                    let got = subordinated_fractional(&h, s, z, g, k)?;
                    let want = subordination_oracle(&spectrum, s, z, g);
                    let err = relative((&got - &want).norm(), want.norm());
                    errors.push(err);
                    t.push(vec![fmt(g), k.to_string(), fmt(re), fmt(SUBORDINATION_ZETA_IM), fmt(s), fmt(err)]);
                }
            }
        }
    }
    if errors.is_empty() {
        return Err(CliError::config("k", "no (gamma, k) pair with k > gamma"));
    }
    let mut summary = Map::new();
    summary.insert("max_error".into(), json!(max_of(errors)));
    Ok(Outcome { csv: t.to_csv(), summary })
}

/// Angles of the complex-time rays used by `dispersive-chain`.
pub const DISPERSIVE_ANGLES: [f64; 3] = [0.0, PI / 4.0, 3.0 * PI / 8.0];
/// Gamma-kernel order for the smoothed spectral-density profile.
pub const DENSITY_ORDER_N: u32 = 100;

fn dispersive_chain(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let h = operator(cfg)?;
    let ec = exponents(cfg)?;
    if cfg.p != 1.0 {
        return Err(CliError::config("p", "complex-time norms are exact only at p = 1"));
    }
    let dcfg = DispersiveConfig::new(ec).map_err(|e| CliError::config("d", e.to_string()))?;
    let gamma = cfg.gamma.unwrap_or(1.0);
    let ns = cfg.grids.n.clone().unwrap_or_else(|| (2..=12).collect());
    if ns.iter().any(|&n| n < 2) {
        return Err(CliError::config("n-grid", "contour orders must be at least 2"));
    }
    let ss = cfg.grids.s.clone().unwrap_or_else(|| log_grid(0.05, 5.0, 8));
    let radii = cfg.grids.t.clone().unwrap_or_else(|| log_grid(0.01, 10.0, 4));
    let zs: Vec<Complex64> =
        radii.iter().flat_map(|&r| DISPERSIVE_ANGLES.iter().map(move |&a| Complex64::from_polar(r, a))).collect();
    let k = cfg.k.unwrap_or(1).max(1);

    let mut reports = vec![dispersive_ratio(&h, &dcfg, &zs)?, derivative_dispersive_check(&h, &dcfg, k, &zs)?];
    let prop2 = proposition2_bound_check(&h, &dcfg, gamma, &ns, &ss, cfg.contour_nodes)?;
    reports.push(prop2.oracle);
    reports.push(prop2.contour);
    let lambdas = match &cfg.grids.lambda {
        Some(l) => l.clone(),
        None => dyadic_lambda_grid(&eigendecompose(&h)?),
    };
    let mut skipped = Vec::new();
    for order in 0..=1u32 {
        let threshold = 2.0 * ec.d() / (ec.d() + 2.0 * (order as f64 + 1.0));
        if ec.p() < threshold {
            reports.push(spectral_derivative_bound_check(&h, &dcfg, order, &lambdas, DENSITY_ORDER_N)?);
        } else {
            skipped.push(json!({ "k": order, "threshold": threshold }));
        }
    }
    let mut summary = Map::new();
    summary.insert("prop2_max_rel_gap".into(), json!(prop2.max_rel_gap));
    summary.insert("cor_deriv_skipped".into(), Value::Array(skipped));
    bound_outcome(&reports, summary)
}

/// Runs the command in memory.
pub fn execute(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    match cfg.command {
        Command::KernelConvergence => kernel_convergence(cfg),
        Command::CalculusApprox => calculus_approx(cfg),
        Command::Density => density(cfg),
        Command::RestrictionCheck => restriction_check(cfg),
        Command::MultiplierBound => multiplier_bound(cfg),
        Command::ContourVerify => contour_verify(cfg),
        Command::SubordinationVerify => subordination_verify(cfg),
        Command::DispersiveChain => dispersive_chain(cfg),
    }
}

/// Runs the command and writes the CSV to `cfg.out` and the JSON summary beside it.
pub fn run(cfg: &ExperimentConfig) -> CliResult<Written> {
    let start = Instant::now();
    let outcome = execute(cfg)?;
    let mut summary = Map::new();
    summary.insert("command".into(), json!(cfg.command.name()));
    summary.insert("config".into(), json!(cfg.echo));
    summary.extend(outcome.summary);
    summary.insert("csv".into(), json!(cfg.out.display().to_string()));
    summary.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    let summary = Value::Object(summary);

    let json_path = cfg.out.with_extension("json");
    let write = |path: &PathBuf, bytes: &[u8]| {
        std::fs::write(path, bytes).map_err(|source| CliError::Output { path: path.display().to_string(), source })
    };
    write(&cfg.out, &outcome.csv)?;
    let mut text = serde_json::to_string_pretty(&summary).expect("summary is plain JSON");
    text.push('\n');
    write(&json_path, text.as_bytes())?;
    Ok(Written { csv: cfg.out.clone(), json: json_path, summary })
}
