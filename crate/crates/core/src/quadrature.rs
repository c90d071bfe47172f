//! Composite Gauss-Legendre quadrature with adaptive panel bisection.
//!
//! Matrix-valued integrands are handled in two passes: the panel layout is
//! planned on a family of scalar probe integrands (one per spectral
//! location), then the matrix integrand is evaluated once per node.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Newton on P_n starting from the Chebyshev-like guess
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=order {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if order == 1 { x } else { p1 };
                let pm1 = if order == 1 { 1.0 } else { p0 };
                dp = n * (x * p - pm1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(&self, f: &F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Absolute error target over the whole interval.
    pub tol: f64,
    /// Integration windows end where the integrand's log drops this far below its peak.
    pub tail_log_drop: f64,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { order: 16, tol: 1e-11, tail_log_drop: 40.0, max_panels: 200_000 }
    }
}

#[derive(Debug, Clone)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub panels: Vec<(f64, f64)>,
}

fn initial_panels(breakpoints: &[f64]) -> Result<Vec<(f64, f64)>> {
    if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(format!(
            "quadrature breakpoints must be strictly increasing, got {breakpoints:?}"
        )));
    }
    Ok(breakpoints.windows(2).map(|w| (w[0], w[1])).collect())
}

/// Adaptive composite Gauss-Legendre integral of `f` over the span of `breakpoints`.
///
/// Features narrower than an initial panel can be missed entirely; callers
/// place breakpoints at known peaks.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral> {
    let probes: [&dyn Fn(f64) -> f64; 1] = [&f];
    let (panels, error) = refine(&probes, breakpoints, spec)?;
    let rule = GaussLegendre::new(spec.order);
    let value = panels.iter().map(|&(a, b)| rule.integrate(&f, a, b)).sum();
    Ok(Integral { value, error, panels })
}

/// Panel layout on which every probe integrand meets the tolerance.
pub fn plan_panels(
    probes: &[&dyn Fn(f64) -> f64],
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<(f64, f64)>> {
    Ok(refine(probes, breakpoints, spec)?.0)
}

fn refine(
    probes: &[&dyn Fn(f64) -> f64],
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<(Vec<(f64, f64)>, f64)> {
    let rule = GaussLegendre::new(spec.order);
    let mut stack = initial_panels(breakpoints)?;
    stack.reverse();
    let total = breakpoints[breakpoints.len() - 1] - breakpoints[0];
    let mut accepted = Vec::new();
    let mut error = 0.0;
    while let Some((a, b)) = stack.pop() {
        let m = 0.5 * (a + b);
        let worst = probes
            .iter()
            .map(|f| {
                let whole = rule.integrate(*f, a, b);
                let halves = rule.integrate(*f, a, m) + rule.integrate(*f, m, b);
                (whole - halves).abs()
            })
            .fold(0.0, f64::max);
        let budget = spec.tol * (b - a) / total;
        if worst <= budget || (b - a) <= 1e-13 * total {
            error += worst;
            accepted.push((a, m));
            accepted.push((m, b));
        } else {
            stack.push((m, b));
            stack.push((a, m));
        }
        if accepted.len() + stack.len() > spec.max_panels {
            return Err(Error::Quadrature { target: spec.tol, achieved: f64::INFINITY });
        }
    }
    if error > spec.tol * 10.0 || !error.is_finite() {
        return Err(Error::Quadrature { target: spec.tol, achieved: error });
    }
    Ok((accepted, error))
}

/// Flattened `(node, weight)` list for a panel layout.
pub fn panel_nodes(panels: &[(f64, f64)], order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(order);
    panels.iter().flat_map(|&(a, b)| rule.mapped(a, b).collect::<Vec<_>>()).collect()
}

/// Largest and smallest `v` around `peak` where `log_f(v) >= log_f(peak) - drop`.
/// `log_f` must be unimodal with its maximum at `peak`.
pub fn log_window<F: Fn(f64) -> f64>(log_f: F, peak: f64, drop: f64, scale: f64) -> (f64, f64) {
    let target = log_f(peak) - drop;
    let edge = |dir: f64| {
        let mut step = scale;
        while log_f(peak + dir * step) > target {
            step *= 2.0;
        }
        let (mut inside, mut outside) = (0.0, step);
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if log_f(peak + dir * mid) > target {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        peak + dir * outside
    };
    (edge(-1.0), edge(1.0))
}
