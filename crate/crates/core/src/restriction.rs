//! Measured ratios for restriction-type `L^p -> L^{p'}` estimates on finite
//! models.
//!
//! Every measurement is a ratio of a computed norm to the conjectured
//! power-law envelope, combined in log-space. On finite models the spectral
//! measure is atomic, so band projectors `eps^{-1} chi_{(lambda-eps, lambda+eps]}(H)`
//! stand in for `dE_H(lambda)` (reported as a surrogate).

use nalgebra::DMatrix;
use rayon::prelude::*;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{domain, Result};
use crate::exponent::ExponentConfig;
use crate::linalg::{
    eigendecompose, fractional_power, heat_semigroup, max_abs, opnorm_p_q_with, semigroup_derivative_scaled,
    BoydOptions, Spectrum, SymmetricOperator,
};
use crate::multiplier::MultiplierFunction;
use crate::report::BoundReport;

pub fn sigma_of(p: f64, d: f64) -> Result<ExponentConfig> {
    ExponentConfig::new(p, d)
}

/// How `||A||_{p -> p'}` is obtained.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum NormMode {
    /// Exact formulas only (`p = 1`); other exponents are rejected.
    #[default]
    Exact,
    /// Power iteration; values are lower bounds.
    Boyd(BoydOptions),
}

impl NormMode {
    pub fn is_lower_bound(&self, cfg: &ExponentConfig) -> bool {
        cfg.p() != 1.0 && matches!(self, NormMode::Boyd(_))
    }

    pub fn check(&self, cfg: &ExponentConfig) -> Result<()> {
        if cfg.p() != 1.0 && *self == NormMode::Exact {
            return domain(format!(
                "p = {} has no exact p -> p' norm formula; enable power-iteration mode",
                cfg.p()
            ));
        }
        Ok(())
    }

    pub fn norm(&self, a: &DMatrix<f64>, cfg: &ExponentConfig) -> Result<f64> {
        self.check(cfg)?;
        if cfg.p() == 1.0 {
            return Ok(max_abs(a));
        }
        let opts = match self {
            NormMode::Boyd(o) => o.clone(),
            NormMode::Exact => unreachable!(),
        };
        opnorm_p_q_with(a, cfg.p(), cfg.p_prime(), &opts)
    }
}

fn stamp(rep: &mut BoundReport, mode: &NormMode, cfg: &ExponentConfig) {
    rep.lower_bound = mode.is_lower_bound(cfg);
    if rep.lower_bound {
        rep.flags.push("lower bound: norms from power iteration".into());
    }
}

/// `ln ||H^N e^{-tH}||_{p->p'}`; `-inf` when the matrix vanishes.
fn log_derivative_norm(h: &SymmetricOperator, t: f64, n: u32, cfg: &ExponentConfig, mode: &NormMode) -> Result<f64> {
    let m = semigroup_derivative_scaled(h, t, n)?;
    if m.is_zero() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(mode.norm(&m.matrix, cfg)?.ln() + m.log_scale)
}

/// `ln r(N, t) = ln ||H^N e^{-tH}|| + (N + sigma) ln t - ln (N-1)! - sigma ln N`.
fn log_r(h: &SymmetricOperator, cfg: &ExponentConfig, mode: &NormMode, n: u32, t: f64) -> Result<f64> {
    let s = cfg.sigma();
    let nf = n as f64;
    Ok(log_derivative_norm(h, t, n, cfg, mode)? + (nf + s) * t.ln() - ln_gamma(nf) - s * nf.ln())
}

fn check_grids(n_grid: &[u32], t_grid: &[f64]) -> Result<()> {
    if n_grid.is_empty() || t_grid.is_empty() {
        return domain("N and t grids must be non-empty");
    }
    if n_grid.contains(&0) {
        return domain("derivative order N must be at least 1");
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return domain("t grid must be positive and finite");
    }
    Ok(())
}

fn grid_points(n_grid: &[u32], t_grid: &[f64]) -> Vec<(u32, f64)> {
    n_grid.iter().flat_map(|&n| t_grid.iter().map(move |&t| (n, t))).collect()
}

fn describe_grid(n_grid: &[u32], t_grid: &[f64]) -> String {
    format!(
        "N in [{}..{}] ({} values), t in [{:e}, {:e}] ({} values)",
        n_grid.iter().min().unwrap_or(&0),
        n_grid.iter().max().unwrap_or(&0),
        n_grid.len(),
        t_grid.first().unwrap_or(&0.0),
        t_grid.last().unwrap_or(&0.0),
        t_grid.len()
    )
}

/// `r(N, t) = ||H^N e^{-tH}||_{p->p'} t^{N+sigma} / ((N-1)! N^sigma)` over the grid.
pub fn check_derivative_bound(
    h: &SymmetricOperator,
    cfg: &ExponentConfig,
    n_grid: &[u32],
    t_grid: &[f64],
    mode: &NormMode,
) -> Result<BoundReport> {
    derivative_family(h, cfg, n_grid, t_grid, mode, "DERIV", 0.0)
}

/// `g(N, t) = r(N, t) / sqrt(N)`: the generically available estimate.
pub fn generic_gap_ratio(
    h: &SymmetricOperator,
    cfg: &ExponentConfig,
    n_grid: &[u32],
    t_grid: &[f64],
    mode: &NormMode,
) -> Result<BoundReport> {
    derivative_family(h, cfg, n_grid, t_grid, mode, "GAP", 0.5)
}

fn derivative_family(
    h: &SymmetricOperator,
    cfg: &ExponentConfig,
    n_grid: &[u32],
    t_grid: &[f64],
    mode: &NormMode,
    id: &str,
    extra_sqrt: f64,
) -> Result<BoundReport> {
    check_grids(n_grid, t_grid)?;
    mode.check(cfg)?;
    let points = grid_points(n_grid, t_grid);
    let ratios: Vec<f64> = points
        .par_iter()
        .map(|&(n, t)| Ok((log_r(h, cfg, mode, n, t)? - extra_sqrt * (n as f64).ln()).exp()))
        .collect::<Result<_>>()?;
    let mut rep = BoundReport::new(id, h.label(), cfg, describe_grid(n_grid, t_grid));
    for (&(n, t), r) in points.iter().zip(ratios) {
        rep.push(("N", n as f64), ("t", t), r);
    }
    stamp(&mut rep, mode, cfg);
    Ok(rep)
}

/// `||e^{-tH}||_{p->p'} t^sigma` over the t grid.
pub fn semigroup_pq_ratio(
    h: &SymmetricOperator,
    cfg: &ExponentConfig,
    t_grid: &[f64],
    mode: &NormMode,
) -> Result<BoundReport> {
    check_grids(&[1], t_grid)?;
    mode.check(cfg)?;
    let ratios: Vec<f64> = t_grid
        .par_iter()
        .map(|&t| Ok(mode.norm(&heat_semigroup(h, t)?, cfg)? * t.powf(cfg.sigma())))
        .collect::<Result<_>>()?;
    let mut rep = BoundReport::new("SEMIGROUP", h.label(), cfg, describe_grid(&[0], t_grid));
    for (&t, r) in t_grid.iter().zip(ratios) {
        rep.push(("N", 0.0), ("t", t), r);
    }
    if eigendecompose(h)?.kernel_dim() > 0 && cfg.sigma() > 0.0 {
        rep.flags.push("zero mode: compact model cannot decay at large t, ratio grows like t^sigma".into());
    }
    stamp(&mut rep, mode, cfg);
    Ok(rep)
}

/// Left and right side of the multiplier bound `||F(H)|| <= C R^sigma int |F| ds/s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierBound {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; 0 when the right side is infinite.
    pub ratio: f64,
    pub vacuous: bool,
}

pub fn multiplier_norm_bound(
    h: &SymmetricOperator,
    f: &MultiplierFunction,
    cfg: &ExponentConfig,
    mode: &NormMode,
) -> Result<MultiplierBound> {
    multiplier_norm_bound_with(&eigendecompose(h)?, f, cfg, mode)
}

pub fn multiplier_norm_bound_with(
    spectrum: &Spectrum,
    f: &MultiplierFunction,
    cfg: &ExponentConfig,
    mode: &NormMode,
) -> Result<MultiplierBound> {
    let lhs = mode.norm(&spectrum.apply(|x| f.eval(x))?, cfg)?;
    let mass = f.integral_ds_over_s();
    if mass.is_infinite() {
        return Ok(MultiplierBound { lhs, rhs: f64::INFINITY, ratio: 0.0, vacuous: true });
    }
    let rhs = f.support_r().powf(cfg.sigma()) * mass;
    Ok(MultiplierBound { lhs, rhs, ratio: lhs / rhs, vacuous: false })
}

/// `eps^{-1} ||chi_{(lambda-eps, lambda+eps]}(H)||_{p->p'}`.
pub fn band_projector_norm(
    h: &SymmetricOperator,
    lambda: f64,
    eps: f64,
    cfg: &ExponentConfig,
    mode: &NormMode,
) -> Result<f64> {
    band_projector_norm_with(&eigendecompose(h)?, lambda, eps, cfg, mode)
}

pub fn band_projector_norm_with(
    spectrum: &Spectrum,
    lambda: f64,
    eps: f64,
    cfg: &ExponentConfig,
    mode: &NormMode,
) -> Result<f64> {
    if !(eps > 0.0 && eps < lambda) {
        return domain(format!("band half-width must satisfy 0 < eps < lambda, got eps = {eps}, lambda = {lambda}"));
    }
    let (lo, hi) = (lambda - eps, lambda + eps);
    if !spectrum.eigenvalues().iter().any(|&x| x > lo && x <= hi) {
        return Ok(0.0);
    }
    Ok(mode.norm(&spectrum.projector(|x| x > lo && x <= hi), cfg)? / eps)
}

/// Half-width rule for band surrogates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsRule {
    /// `eps = fraction * lambda`.
    Fraction(f64),
    /// `eps = max(fraction * lambda, 2 * local spectral gap)`, capped below `lambda`.
    GapAware(f64),
}

impl Default for EpsRule {
    fn default() -> Self {
        EpsRule::GapAware(0.125)
    }
}

impl EpsRule {
    pub fn eps(&self, spectrum: &Spectrum, lambda: f64) -> f64 {
        match *self {
            EpsRule::Fraction(f) => f * lambda,
            EpsRule::GapAware(f) => {
                let e = (f * lambda).max(2.0 * local_gap(spectrum, lambda));
                e.min(lambda * (1.0 - 1e-12))
            }
        }
    }
}

/// Distance between the distinct eigenvalues bracketing `lambda`.
pub fn local_gap(spectrum: &Spectrum, lambda: f64) -> f64 {
    let distinct = spectrum.distinct_eigenvalues();
    let below = distinct.iter().rev().find(|&&x| x <= lambda);
    let above = distinct.iter().find(|&&x| x > lambda);
    match (below, above) {
        (Some(a), Some(b)) => b - a,
        (Some(a), None) => lambda - a,
        (None, Some(b)) => b - lambda,
        (None, None) => 0.0,
    }
}

/// Dyadic grid `lambda_max 2^{-j}` down to `lambda_min_pos`.
pub fn dyadic_lambda_grid(spectrum: &Spectrum) -> Vec<f64> {
    let (Some(lo), hi) = (spectrum.lambda_min_positive(), spectrum.lambda_max()) else {
        return Vec::new();
    };
    let mut grid = Vec::new();
    let mut l = hi;
    while l >= lo {
        grid.push(l);
        l *= 0.5;
    }
    grid.reverse();
    grid
}

/// `band_projector_norm(lambda) * lambda^{1 - exponent}` over the grid.
fn band_scaling(
    spectrum: &Spectrum,
    label: &str,
    id: &str,
    cfg: &ExponentConfig,
    exponent: f64,
    lambda_grid: &[f64],
    rule: EpsRule,
    mode: &NormMode,
) -> Result<BoundReport> {
    if lambda_grid.is_empty() {
        return domain("lambda grid must be non-empty");
    }
    let mut rep = BoundReport::new(id, label, cfg, format!("{} lambda values, {rule:?}", lambda_grid.len()));
    for &l in lambda_grid {
        let eps = rule.eps(spectrum, l);
        let b = band_projector_norm_with(spectrum, l, eps, cfg, mode)?;
        rep.push(("lambda", l), ("eps", eps), b * l.powf(1.0 - exponent));
    }
    rep.flags.push("surrogate: band projectors stand in for the spectral measure".into());
    stamp(&mut rep, mode, cfg);
    Ok(rep)
}

/// Band-surrogate restriction ratios `eps^{-1} ||chi|| lambda^{1-sigma}`.
pub fn restriction_band_check(
    h: &SymmetricOperator,
    cfg: &ExponentConfig,
    lambda_grid: &[f64],
    rule: EpsRule,
    mode: &NormMode,
) -> Result<BoundReport> {
    band_scaling(&eigendecompose(h)?, h.label(), "REST", cfg, cfg.sigma(), lambda_grid, rule, mode)
}

/// Band-surrogate ratios for `H^alpha` against the exponent `sigma / alpha`.
pub fn fractional_rescale_check(
    h: &SymmetricOperator,
    alpha: f64,
    cfg: &ExponentConfig,
    lambda_grid: &[f64],
    rule: EpsRule,
    mode: &NormMode,
) -> Result<BoundReport> {
    if !(alpha > 0.0) {
        return domain(format!("alpha must be positive, got {alpha}"));
    }
    let ha = if alpha == 1.0 { h.clone() } else { fractional_power(h, alpha)? };
    band_scaling(&eigendecompose(&ha)?, ha.label(), "REST-ALPHA", cfg, cfg.sigma() / alpha, lambda_grid, rule, mode)
}

/// Both sides of the multiplier-to-band comparison for `F = chi_{(lambda-eps, lambda+eps]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResfRest {
    /// `||F(H)|| / (2 eps/lambda * lambda^sigma)`.
    pub from_multiplier: f64,
    /// `band_projector_norm * lambda^{1-sigma} / 2`.
    pub from_band: f64,
    /// `R^sigma int |F| ds/s` over `2 eps/lambda * lambda^sigma`, with `R = lambda + eps`:
    /// `(1+x)^sigma ln((1+x)/(1-x)) / (2x)`, `x = eps/lambda`.
    pub envelope_factor: f64,
    pub multiplier: MultiplierBound,
}

pub fn resf_rest_comparison(
    spectrum: &Spectrum,
    lambda: f64,
    eps: f64,
    cfg: &ExponentConfig,
    mode: &NormMode,
) -> Result<ResfRest> {
    let f = MultiplierFunction::indicator(lambda - eps, lambda + eps)?;
    let m = multiplier_norm_bound_with(spectrum, &f, cfg, mode)?;
    let band = band_projector_norm_with(spectrum, lambda, eps, cfg, mode)?;
    let s = cfg.sigma();
    let x = eps / lambda;
    Ok(ResfRest {
        from_multiplier: m.lhs / (2.0 * x * lambda.powf(s)),
        from_band: band * lambda.powf(1.0 - s) / 2.0,
        envelope_factor: (1.0 + x).powf(s) * ((1.0 + x) / (1.0 - x)).ln() / (2.0 * x),
        multiplier: m,
    })
}

/// `Gamma(x) / (x^{x-1/2} e^{-x} sqrt(2 pi))`.
pub fn stirling_ratio(x: f64) -> f64 {
    if x < 100.0 {
        gamma(x) / (x.powf(x - 0.5) * (-x).exp() * (2.0 * std::f64::consts::PI).sqrt())
    } else {
        (ln_gamma(x) - (x - 0.5) * x.ln() + x - 0.5 * (2.0 * std::f64::consts::PI).ln()).exp()
    }
}

/// `max_t r(N, t)` for the scalar operator `diag(1)`, attained at `t = N + sigma`:
/// `(N+sigma)^{N+sigma} e^{-(N+sigma)} / ((N-1)! N^sigma)`.
pub fn scalar_max_ratio(n: u32, sigma: f64) -> f64 {
    let nf = n as f64;
    let m = nf + sigma;
    (m * m.ln() - m - ln_gamma(nf) - sigma * nf.ln()).exp()
}

/// Log-uniform grid with `per_decade` points per decade, endpoints included.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let count = (decades * per_decade as f64).round() as usize;
    (0..=count).map(|i| lo * 10f64.powf(decades * i as f64 / count.max(1) as f64)).collect()
}

/// Default t grid: 16 steps per decade on `[1e-2, 1e2]`, 65 points.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 16)
}

pub fn default_n_grid() -> Vec<u32> {
    (1..=40).collect()
}
