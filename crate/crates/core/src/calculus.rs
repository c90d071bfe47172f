//! Operator-level Gamma-kernel calculus.
//!
//! `phi(H)` is approximated by
//! `int phi(1/s) (c s H)^a e^{-c s H} / Gamma(a) ds/s`, integrated in
//! `u = ln s` with every node evaluated through
//! [`semigroup_derivative_scaled`]; no eigendecomposition enters the
//! integrand for integer shapes. The spectrum is only used to plan the
//! panel layout (the weight peaks at a different `s` for every eigenvalue)
//! and for the optional kernel correction.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::gamma_kernel::{density_kernel, extend_window, lambda_derivative_poly, DeltaForm, GammaKernel};
use crate::gamma_kernel::density_kernel_with;
use crate::linalg::{eigendecompose, semigroup_derivative_scaled, symmetric_spectral_norm, Spectrum, SymmetricOperator};
use crate::multiplier::HolderMultiplier;
use crate::quadrature::{panel_nodes, plan_panels, QuadratureSpec};
use crate::reduce::ordered_sum;

/// Probes per kernel width `1/sqrt(a)` when planning the shared grid.
const PROBES_PER_WIDTH: f64 = 4.0;
const MAX_PROBES: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct CalculusOptions {
    pub quad: QuadratureSpec,
    /// Add `phi(0) P_ker` so that the kernel of `H` is not annihilated.
    pub kernel_correction: bool,
}

impl Default for CalculusOptions {
    fn default() -> Self {
        Self { quad: QuadratureSpec::default(), kernel_correction: true }
    }
}

#[derive(Debug, Clone)]
pub struct Approximation {
    pub matrix: DMatrix<f64>,
    pub panels: usize,
    pub nodes: usize,
    pub kernel_corrected: bool,
}

/// `phi(H)` through the spectral theorem.
pub fn oracle_calculus<F: Fn(f64) -> f64>(h: &SymmetricOperator, f: F) -> Result<DMatrix<f64>> {
    eigendecompose(h)?.apply(f)
}

pub fn approximate_calculus(
    h: &SymmetricOperator,
    phi: &HolderMultiplier,
    n: u32,
    opts: &CalculusOptions,
) -> Result<DMatrix<f64>> {
    Ok(apply_kernel(h, &GammaKernel::theorem(n)?, phi, opts)?.matrix)
}

pub fn approximate_calculus_delta(
    h: &SymmetricOperator,
    phi: &HolderMultiplier,
    n: u32,
    delta: f64,
    form: DeltaForm,
    opts: &CalculusOptions,
) -> Result<DMatrix<f64>> {
    Ok(apply_kernel(h, &GammaKernel::with_delta(n, delta, form)?, phi, opts)?.matrix)
}

/// Plans the shared `u`-panels for all eigenvalues in `[lo, hi]`.
fn plan_u_panels(
    kernel: &GammaKernel,
    phi: &(dyn Fn(f64) -> f64 + Sync),
    eigen_probes: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<(f64, f64)>> {
    let (a, c) = (kernel.shape(), kernel.scale());
    let lg = ln_gamma(a);
    let lo_l = eigen_probes[0];
    let hi_l = eigen_probes[eigen_probes.len() - 1];
    let width = 1.0 / a.sqrt();
    let span = (hi_l / lo_l).ln();
    let count = ((PROBES_PER_WIDTH * span / width).ceil() as usize + 1).min(MAX_PROBES);
    let mut lambdas: Vec<f64> = (0..=count)
        .map(|i| lo_l * (span * i as f64 / count.max(1) as f64).exp())
        .chain(eigen_probes.iter().copied())
        .collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * y.abs());

    let integrand = move |l: f64| {
        let shift = (c * l).ln();
        move |u: f64| {
            let v = u + shift;
            let w = (a * v - v.exp() - lg).exp();
            if w == 0.0 {
                0.0
            } else {
                phi((-u).exp()) * w
            }
        }
    };
    let probes: Vec<_> = lambdas.iter().map(|&l| integrand(l)).collect();
    let envelope = |u: f64| probes.iter().map(|f| f(u).abs()).fold(0.0, f64::max);

    let (v_lo, v_hi) = kernel.window_v(quad.tail_log_drop);
    let (u_lo, u_hi) = extend_window(&envelope, v_lo - (c * hi_l).ln(), v_hi - (c * lo_l).ln(), quad)?;
    let pieces = ((u_hi - u_lo) / width).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=pieces).map(|i| u_lo + (u_hi - u_lo) * i as f64 / pieces as f64).collect();
    let dyn_probes: Vec<&dyn Fn(f64) -> f64> = probes.iter().map(|f| f as &dyn Fn(f64) -> f64).collect();
    plan_panels(&dyn_probes, &breaks, quad)
}

/// Quadrature of the kernel integral on `H`.
pub fn apply_kernel(
    h: &SymmetricOperator,
    kernel: &GammaKernel,
    phi: &HolderMultiplier,
    opts: &CalculusOptions,
) -> Result<Approximation> {
    let spectrum = eigendecompose(h)?;
    apply_kernel_with(h, &spectrum, kernel, phi.func().as_ref(), opts)
}

pub(crate) fn apply_kernel_with(
    h: &SymmetricOperator,
    spectrum: &Spectrum,
    kernel: &GammaKernel,
    phi: &(dyn Fn(f64) -> f64 + Sync),
    opts: &CalculusOptions,
) -> Result<Approximation> {
    let dim = h.dim();
    let Some(_) = spectrum.lambda_min_positive() else {
        // H = 0: the kernel integral vanishes identically
        return Ok(Approximation {
            matrix: DMatrix::identity(dim, dim) * phi(0.0),
            panels: 0,
            nodes: 0,
            kernel_corrected: true,
        });
    };
    let positive: Vec<f64> = spectrum.distinct_eigenvalues().into_iter().filter(|&l| l > 0.0).collect();
    let panels = plan_u_panels(kernel, phi, &positive, &opts.quad)?;
    let nodes = panel_nodes(&panels, opts.quad.order);
    let (a, c) = (kernel.shape(), kernel.scale());
    let lg = ln_gamma(a);

    let mut matrix = match kernel.integer_shape() {
        Some(power) => ordered_sum(
            nodes.len(),
            || DMatrix::zeros(dim, dim),
            |i| {
                let (u, w) = nodes[i];
                let f = phi((-u).exp());
                if f == 0.0 {
                    return Ok(None);
                }
                let t = c * u.exp();
                let scaled = semigroup_derivative_scaled(h, t, power)?;
                let log_factor = a * t.ln() - lg + scaled.log_scale + (w * f.abs()).ln();
                if scaled.is_zero() || log_factor < -745.0 {
                    return Ok(None);
                }
                Ok(Some(scaled.matrix * (f.signum() * log_factor.exp())))
            },
        )?,
        None => {
            // fractional powers of H only exist through the spectrum here
            let values = spectrum.map_values(|l| {
                if l == 0.0 {
                    return 0.0;
                }
                nodes
                    .iter()
                    .map(|&(u, w)| {
                        let v = u + (c * l).ln();
                        w * phi((-u).exp()) * (a * v - v.exp() - lg).exp()
                    })
                    .sum()
            })?;
            spectrum.assemble(&values)
        }
    };
    if opts.kernel_correction && spectrum.kernel_dim() > 0 {
        matrix += spectrum.kernel_projector() * phi(0.0);
    }
    crate::linalg::symmetrize(&mut matrix);
    Ok(Approximation { matrix, panels: panels.len(), nodes: nodes.len(), kernel_corrected: opts.kernel_correction })
}

/// Smoothed `d^k/dlambda^k dE_H(lambda)` and its trace.
#[derive(Debug, Clone)]
pub struct Density {
    pub matrix: DMatrix<f64>,
    pub trace: f64,
}

pub fn spectral_density(h: &SymmetricOperator, lambda: f64, n: u32, k: u32) -> Result<Density> {
    spectral_density_with(&eigendecompose(h)?, lambda, n, k)
}

pub fn spectral_density_with(spectrum: &Spectrum, lambda: f64, n: u32, k: u32) -> Result<Density> {
    // validates (n, k, lambda) once
    density_kernel(n, k, lambda, 1.0)?;
    let poly = lambda_derivative_poly(1, n as i128 + 1, k);
    let values = spectrum.map_values(|mu| density_kernel_with(&poly, n, k, lambda, mu).unwrap_or(f64::NAN))?;
    Ok(Density { matrix: spectrum.assemble(&values), trace: values.iter().sum() })
}

/// Trace of the smoothed density without assembling the matrix.
pub fn density_trace(spectrum: &Spectrum, lambda: f64, n: u32, k: u32) -> Result<f64> {
    density_kernel(n, k, lambda, 1.0)?;
    let poly = lambda_derivative_poly(1, n as i128 + 1, k);
    spectrum.eigenvalues().iter().map(|&mu| density_kernel_with(&poly, n, k, lambda, mu)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalculusReport {
    pub n: u32,
    pub operator_label: String,
    pub multiplier_label: String,
    pub delta: f64,
    /// Spectral-norm distance between approximant and oracle.
    pub approx_error_2: f64,
    /// `max_j |mu_N(lambda_j) - phi(lambda_j)|`.
    pub scalar_sup_error: f64,
    pub quad_panels: usize,
    pub kernel_corrected: bool,
}

pub const CALCULUS_CSV_HEADER: [&str; 7] =
    ["operator", "multiplier", "N", "delta", "approx_error_2", "scalar_sup_error", "quad_panels"];

impl CalculusReport {
    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.operator_label.clone(),
            self.multiplier_label.clone(),
            self.n.to_string(),
            format!("{:.16e}", self.delta),
            format!("{:.16e}", self.approx_error_2),
            format!("{:.16e}", self.scalar_sup_error),
            self.quad_panels.to_string(),
        ]
    }
}

/// Approximation against oracle for one kernel.
pub fn calculus_report(
    h: &SymmetricOperator,
    spectrum: &Spectrum,
    kernel: &GammaKernel,
    n: u32,
    delta: f64,
    phi: &HolderMultiplier,
    opts: &CalculusOptions,
) -> Result<CalculusReport> {
    let approx = apply_kernel_with(h, spectrum, kernel, phi.func().as_ref(), opts)?;
    let oracle = spectrum.apply(|x| phi.eval(x))?;
    let mut sup: f64 = 0.0;
    for &l in &spectrum.distinct_eigenvalues() {
        let approx_l = if l == 0.0 {
            if approx.kernel_corrected { phi.eval(0.0) } else { 0.0 }
        } else {
            kernel.apply_scalar(phi.func().as_ref(), l, &opts.quad)?
        };
        sup = sup.max((approx_l - phi.eval(l)).abs());
    }
    Ok(CalculusReport {
        n,
        operator_label: h.label().to_string(),
        multiplier_label: phi.label().to_string(),
        delta,
        approx_error_2: symmetric_spectral_norm(&(approx.matrix - oracle)),
        scalar_sup_error: sup,
        quad_panels: approx.panels,
        kernel_corrected: approx.kernel_corrected,
    })
}

pub fn convergence_report(
    h: &SymmetricOperator,
    phi: &HolderMultiplier,
    n_list: &[u32],
    opts: &CalculusOptions,
) -> Result<Vec<CalculusReport>> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return domain("N list must be strictly ascending");
    }
    if n_list.is_empty() {
        return Ok(Vec::new());
    }
    let spectrum = eigendecompose(h)?;
    n_list
        .iter()
        .map(|&n| calculus_report(h, &spectrum, &GammaKernel::theorem(n)?, n, 1.0, phi, opts))
        .collect()
}
