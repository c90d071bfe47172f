//! Gamma-kernel approximate identity.
//!
//! `GammaKernel { shape: a, scale: c }` averages a multiplier as
//! `mu(lambda) = int phi(c lambda / x) x^a e^{-x} / Gamma(a) dx/x`.
//! The base kernel is `(N, N-1)`; the two `delta`-variants are `(N, N-delta)`
//! and `(N+delta, N)`. Integration runs in `v = ln x`, where the weight is a
//! log-concave bump of width `1/sqrt(a)` centred at `ln a`.

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_adaptive, log_window, QuadratureSpec};

/// Highest supported `lambda`-derivative order of the density kernel.
pub const MAX_DENSITY_ORDER: u32 = 4;

/// `ln(1 / Gamma(N - delta + 1))`.
pub fn log_norm_const(n: u32, delta: f64) -> Result<f64> {
    if n < 2 {
        return domain(format!("N must be at least 2, got {n}"));
    }
    check_delta(delta)?;
    Ok(-ln_gamma(n as f64 - delta + 1.0))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        domain(format!("delta must lie in (0, 1], got {delta}"))
    }
}

/// `ln w_N(x) = N ln x - x - ln Gamma(N)`.
pub fn log_weight(n: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let n = n as f64;
    n * x.ln() - x - ln_gamma(n)
}

/// `w_N(x) = x^N e^{-x} / (N-1)!`, normalised so that `int w_N dx/x = 1`.
pub fn weight(n: u32, x: f64) -> f64 {
    log_weight(n, x).exp()
}

/// Which `delta`-generalisation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaForm {
    /// `((N - delta) s H)^N e^{-(N-delta) s H} / Gamma(N)`
    A,
    /// `(N s H)^{N+delta} e^{-N s H} / Gamma(N + delta)`
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaKernel {
    shape: f64,
    scale: f64,
}

impl GammaKernel {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 1.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return domain(format!("Gamma kernel needs shape > 1 and scale > 0, got ({shape}, {scale})"));
        }
        Ok(Self { shape, scale })
    }

    /// Kernel of order `N >= 2`: shape `N`, scale `N - 1`.
    pub fn theorem(n: u32) -> Result<Self> {
        if n < 2 {
            return domain(format!("N must be at least 2, got {n}"));
        }
        Self::new(n as f64, n as f64 - 1.0)
    }

    pub fn with_delta(n: u32, delta: f64, form: DeltaForm) -> Result<Self> {
        if n < 2 {
            return domain(format!("N must be at least 2, got {n}"));
        }
        check_delta(delta)?;
        let n = n as f64;
        match form {
            DeltaForm::A => Self::new(n, n - delta),
            DeltaForm::B => Self::new(n + delta, n),
        }
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Whether `H^shape` is an integer power, i.e. reachable through semigroup derivatives.
    pub fn integer_shape(&self) -> Option<u32> {
        (self.shape.fract() == 0.0 && self.shape <= u32::MAX as f64).then_some(self.shape as u32)
    }

    /// `a v - e^v - ln Gamma(a)`: the log weight in `v = ln x`.
    pub fn log_weight_v(&self, v: f64) -> f64 {
        self.shape * v - v.exp() - ln_gamma(self.shape)
    }

    /// `v`-interval outside which the weight is `drop` below its peak in log.
    pub fn window_v(&self, drop: f64) -> (f64, f64) {
        let a = self.shape;
        log_window(|v| a * v - v.exp(), a.ln(), drop, 1.0 / a.sqrt())
    }

    /// Scalar average `mu(lambda)`; `lambda = 0` gives 0, since the kernel vanishes there.
    pub fn apply_scalar(&self, phi: &dyn Fn(f64) -> f64, lambda: f64, spec: &QuadratureSpec) -> Result<f64> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return domain(format!("lambda must be nonnegative and finite, got {lambda}"));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let cl = self.scale * lambda;
        let lg = ln_gamma(self.shape);
        let a = self.shape;
        let f = |v: f64| {
            let w = (a * v - v.exp() - lg).exp();
            if w == 0.0 {
                0.0
            } else {
                phi(cl * (-v).exp()) * w
            }
        };
        let (lo, hi) = self.window_v(spec.tail_log_drop);
        let (lo, hi) = extend_window(&f, lo, hi, spec)?;
        Ok(integrate_adaptive(f, &[lo, a.ln(), hi], spec)?.value)
    }
}

/// Pushes window edges outward while the integrand there is not negligible
/// (multipliers that grow towards one end shift the effective tail).
pub(crate) fn extend_window<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let step = 0.25 * (hi - lo);
    let negligible = 1e-4 * spec.tol / (hi - lo);
    let mut guard = 0;
    while f(lo).abs() > negligible {
        lo -= step;
        guard += 1;
        if guard > 400 {
            return Err(Error::Quadrature { target: spec.tol, achieved: f(lo).abs() });
        }
    }
    while f(hi).abs() > negligible {
        hi += step;
        guard += 1;
        if guard > 400 {
            return Err(Error::Quadrature { target: spec.tol, achieved: f(hi).abs() });
        }
    }
    Ok((lo, hi))
}

/// `mu_N(lambda) = int phi((N-1) lambda / x) w_N(x) dx/x`.
pub fn mu_n(phi: &dyn Fn(f64) -> f64, n: u32, lambda: f64, spec: &QuadratureSpec) -> Result<f64> {
    GammaKernel::theorem(n)?.apply_scalar(phi, lambda, spec)
}

/// `eps_N = ln N / sqrt(N)` with `u_N = 1 - eps_N`, `v_N = 1 + eps_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub epsilon: f64,
    pub u: f64,
    pub v: f64,
}

/// Window sequence. For integer `N >= 2` the value never reaches 1 (its
/// maximum over reals is `2/e`), so the degenerate-window error guards only
/// against `N < 2`.
pub fn window_epsilon(n: u32) -> Result<Window> {
    if n < 2 {
        return Err(Error::DegenerateWindow { n, epsilon: if n == 1 { 0.0 } else { f64::NAN } });
    }
    let nf = n as f64;
    let epsilon = nf.ln() / nf.sqrt();
    if epsilon >= 1.0 {
        return Err(Error::DegenerateWindow { n, epsilon });
    }
    Ok(Window { epsilon, u: 1.0 - epsilon, v: 1.0 + epsilon })
}

/// Near-field / window / far-field diagnostic bounds, absolute constants set to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSplit {
    pub below: f64,
    pub window: f64,
    pub above: f64,
}

/// `I = sqrt(N) (u e^{1-u})^{N-1} |phi|`, `II = sqrt(N) omega(4 lambda eps) eps`,
/// `III = sqrt(N) (v e^{1-v})^{N-2} |phi|`, evaluated in log-space.
pub fn error_split(
    sup_bound: f64,
    modulus: &dyn Fn(f64) -> f64,
    n: u32,
    lambda: f64,
) -> Result<ErrorSplit> {
    let w = window_epsilon(n)?;
    let nf = n as f64;
    let half_ln_n = 0.5 * nf.ln();
    let tail = |x: f64, power: f64| (half_ln_n + power * (x.ln() + 1.0 - x)).exp() * sup_bound;
    Ok(ErrorSplit {
        below: tail(w.u, nf - 1.0),
        window: nf.sqrt() * modulus(4.0 * lambda * w.epsilon) * w.epsilon,
        above: tail(w.v, nf - 2.0),
    })
}

/// Integer polynomial `P` in `y` such that
/// `d^k/dlambda^k [lambda^{-m} y^b e^{-y}] = lambda^{-(m+k)} P(y) y^b e^{-y}`
/// with `y = c / lambda`. Coefficients are listed by ascending power.
pub fn lambda_derivative_poly(m: i128, b: i128, k: u32) -> Vec<i128> {
    let mut p = vec![1i128];
    for j in 0..k as i128 {
        // (y - b - (m + j)) P - y P'
        let shift = b + m + j;
        let mut next = vec![0i128; p.len() + 1];
        for (i, &c) in p.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= shift * c;
            next[i] -= i as i128 * c;
        }
        p = next;
    }
    p
}

pub fn eval_poly(coeffs: &[i128], y: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c as f64)
}

/// `g_{N,k}(lambda; mu) = (1/N!) d^k/dlambda^k [lambda^{-1} y^{N+1} e^{-y}]`, `y = N mu / lambda`.
pub fn density_kernel(n: u32, k: u32, lambda: f64, mu: f64) -> Result<f64> {
    if k > MAX_DENSITY_ORDER {
        return Err(Error::UnsupportedOrder(k));
    }
    if n < 1 {
        return domain("density kernel needs N >= 1");
    }
    if !(lambda > 0.0) || !(mu >= 0.0) {
        return domain(format!("density kernel needs lambda > 0 and mu >= 0, got ({lambda}, {mu})"));
    }
    density_kernel_with(&lambda_derivative_poly(1, n as i128 + 1, k), n, k, lambda, mu)
}

pub(crate) fn density_kernel_with(poly: &[i128], n: u32, k: u32, lambda: f64, mu: f64) -> Result<f64> {
    if mu == 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let y = nf * mu / lambda;
    let log_core = (nf + 1.0) * y.ln() - y - ln_gamma(nf + 1.0) - (k as f64 + 1.0) * lambda.ln();
    Ok(eval_poly(poly, y) * log_core.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn norm_const_examples() {
        assert_relative_eq!(log_norm_const(5, 1.0).unwrap(), -(24f64.ln()), max_relative = 1e-14);
        assert!(log_norm_const(2, 1.0).unwrap().abs() < 1e-15);
        // Gamma(7/2) = (15/8) sqrt(pi)
        let g = 15.0 / 8.0 * std::f64::consts::PI.sqrt();
        assert_relative_eq!(log_norm_const(3, 0.5).unwrap(), -g.ln(), max_relative = 1e-13);
        assert!(log_norm_const(3, 0.0).is_err());
    }

    #[test]
    fn weight_examples() {
        assert_relative_eq!(weight(2, 1.0), (-1f64).exp(), max_relative = 1e-14);
        assert!(weight(2, 1e-200) < 1e-300);
        // high precision value of 100^100 e^{-100} / 99!
        assert_relative_eq!(weight(100, 100.0), 3.986099680914713523, max_relative = 1e-12);
    }

    #[test]
    fn mu_examples() {
        let spec = QuadratureSpec::default();
        for (n, l) in [(2, 0.1), (10, 7.0), (64, 1.0)] {
            assert_relative_eq!(mu_n(&|_| 7.0, n, l, &spec).unwrap(), 7.0, max_relative = 1e-11);
        }
        assert_relative_eq!(mu_n(&|x| x, 10, 3.0, &spec).unwrap(), 3.0, max_relative = 1e-11);
        assert_relative_eq!(mu_n(&|x| x * x, 10, 1.0, &spec).unwrap(), 1.125, max_relative = 1e-11);
        assert_relative_eq!(mu_n(&|x| x * x, 3, 1.0, &spec).unwrap(), 2.0, max_relative = 1e-10);
    }

    #[test]
    fn delta_forms_on_monomial() {
        let spec = QuadratureSpec::default();
        let (n, d, l) = (200u32, 0.25, 1.7);
        let a = GammaKernel::with_delta(n, d, DeltaForm::A).unwrap().apply_scalar(&|x| x, l, &spec).unwrap();
        let b = GammaKernel::with_delta(n, d, DeltaForm::B).unwrap().apply_scalar(&|x| x, l, &spec).unwrap();
        let nf = n as f64;
        assert_relative_eq!(a, l * (nf - d) / (nf - 1.0), max_relative = 1e-11);
        assert_relative_eq!(b, l * nf / (nf + d - 1.0), max_relative = 1e-11);
        assert_relative_eq!(a - b, d * (1.0 - d) * l / ((nf - 1.0) * (nf + d - 1.0)), max_relative = 1e-5);
        assert!(GammaKernel::with_delta(n, 0.0, DeltaForm::A).is_err());
        assert_eq!(GammaKernel::with_delta(n, 1.0, DeltaForm::A).unwrap(), GammaKernel::theorem(n).unwrap());
    }

    #[test]
    fn window_examples() {
        assert_relative_eq!(window_epsilon(100).unwrap().epsilon, 0.4605170185988091, max_relative = 1e-14);
        assert_relative_eq!(window_epsilon(7).unwrap().epsilon, 0.7354849040109983, max_relative = 1e-14);
        assert_relative_eq!(window_epsilon(10_000).unwrap().epsilon, 0.0921034037197618, max_relative = 1e-14);
        assert!(matches!(window_epsilon(1), Err(Error::DegenerateWindow { .. })));
        let w = window_epsilon(37).unwrap();
        assert_relative_eq!(37.0 * w.epsilon * w.epsilon, 37f64.ln().powi(2), max_relative = 1e-14);
    }

    #[test]
    fn error_split_examples() {
        let s = error_split(1.0, &|s| s, 100, 1.0).unwrap();
        assert_relative_eq!(s.below, 1.84415382487695107e-6, max_relative = 1e-10);
        assert_relative_eq!(s.window, 8.48303697676543682, max_relative = 1e-12);
        assert_relative_eq!(s.above, 3.32390765306613610e-3, max_relative = 1e-10);
    }

    #[test]
    fn error_split_decays() {
        // (ln N)^2 / sqrt(N) only starts decreasing past N = e^4
        let mut prev = error_split(1.0, &|s| s, 64, 1.0).unwrap();
        for n in [256, 1024, 4096, 1 << 16, 1 << 20] {
            let s = error_split(1.0, &|s| s, n, 1.0).unwrap();
            assert!(s.below < prev.below && s.above < prev.above && s.window < prev.window);
            prev = s;
        }
        // both tails behave like N^{1/2 - ln(N)/2}; at N = 2^20 that is ~1e-39
        assert!(prev.below < 1e-35 && prev.above < 1e-35 && prev.window < 1.0);
    }

    #[test]
    fn density_examples() {
        assert_eq!(density_kernel(5, 0, 1.3, 0.0).unwrap(), 0.0);
        assert_relative_eq!(density_kernel(1, 0, 1.0, 1.0).unwrap(), (-1f64).exp(), max_relative = 1e-14);
        assert!(matches!(density_kernel(3, 5, 1.0, 1.0), Err(Error::UnsupportedOrder(5))));
    }

    #[test]
    fn first_derivative_poly() {
        // d/dlambda [lambda^{-1} y^{N+1} e^{-y}] = lambda^{-2} (y - (N+2)) y^{N+1} e^{-y}
        assert_eq!(lambda_derivative_poly(1, 51, 1), vec![-52, 1]);
        assert_eq!(lambda_derivative_poly(0, 4, 0), vec![1]);
    }

    #[test]
    fn derivative_orders_match_finite_differences() {
        let (n, mu) = (50u32, 1.0);
        for k in 1..=MAX_DENSITY_ORDER {
            for &l in &[0.8, 1.0, 1.15] {
                let h = 1e-3;
                // five-point stencil on the order k-1 kernel
                let g = |x: f64| density_kernel(n, k - 1, x, mu).unwrap();
                let fd = (-g(l + 2.0 * h) + 8.0 * g(l + h) - 8.0 * g(l - h) + g(l - 2.0 * h)) / (12.0 * h);
                let exact = density_kernel(n, k, l, mu).unwrap();
                let scale = exact.abs().max(density_kernel(n, k, 1.0, mu).unwrap().abs());
                assert!((fd - exact).abs() <= 1e-5 * scale, "k={k} l={l} fd={fd} exact={exact}");
            }
        }
    }

    #[test]
    fn density_is_normalised_in_lambda() {
        let spec = QuadratureSpec::default();
        for (n, mu) in [(1u32, 1.0f64), (10, 0.3), (200, 2.0)] {
            let total = crate::quadrature::integrate_adaptive(
                |u: f64| {
                    let l = u.exp();
                    density_kernel(n, 0, l, mu).unwrap() * l
                },
                &[-60.0, mu.ln(), 40.0],
                &spec,
            )
            .unwrap()
            .value;
            assert_relative_eq!(total, 1.0, max_relative = 1e-9);
        }
    }
}
