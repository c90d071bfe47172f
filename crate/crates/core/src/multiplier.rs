//! Scalar spectral multipliers.
//!
//! [`HolderMultiplier`] carries the regularity data the Gamma-kernel
//! convergence argument needs; [`MultiplierFunction`] is the compactly
//! supported, merely bounded kind used in `||F(H)||` bounds.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_adaptive, QuadratureSpec};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Names accepted by [`HolderMultiplier::by_name`] and [`MultiplierFunction::by_name`].
pub const LIBRARY_NAMES: &str = "const:c, poly1, poly2, cauchy, gauss, bump:a:b, indicator:a:b";

const HOLDER_SAMPLES: usize = 1000;
const SAMPLE_RANGE: f64 = 32.0;

/// Bounded, uniformly `rho`-Holder function on `[0, inf)`.
///
/// Polynomial test functions are admitted with infinite `sup_bound` and
/// `holder_const`; they are only meaningful for exactness checks.
#[derive(Clone)]
pub struct HolderMultiplier {
    label: String,
    rho: f64,
    holder_const: f64,
    sup_bound: f64,
    func: ScalarFn,
}

impl fmt::Debug for HolderMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HolderMultiplier")
            .field("label", &self.label)
            .field("rho", &self.rho)
            .field("holder_const", &self.holder_const)
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

/// Point `i` of the two-dimensional R2 low-discrepancy sequence.
fn r2_point(i: usize) -> (f64, f64) {
    // plastic number
    const G: f64 = 1.324_717_957_244_746;
    let i = i as f64 + 1.0;
    ((0.5 + i / G).fract(), (0.5 + i / (G * G)).fract())
}

impl HolderMultiplier {
    /// Builds the multiplier and runs the sampled sup and Holder checks.
    pub fn new<F>(label: impl Into<String>, rho: f64, holder_const: f64, sup_bound: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let m = Self { label: label.into(), rho, holder_const, sup_bound, func: Arc::new(f) };
        if !(rho > 0.0 && rho <= 1.0) {
            return domain(format!("{}: Holder exponent must lie in (0, 1], got {rho}", m.label));
        }
        if !(holder_const > 0.0) || !(sup_bound > 0.0) {
            return domain(format!("{}: Holder constant and sup bound must be positive", m.label));
        }
        m.check_sampled()?;
        Ok(m)
    }

    /// Sampled verification of the sup bound and the Holder modulus on
    /// `HOLDER_SAMPLES` quasi-random pairs with `|x - y| <= 1`.
    pub fn check_sampled(&self) -> Result<()> {
        for i in 0..HOLDER_SAMPLES {
            let (a, b) = r2_point(i);
            let x = a * SAMPLE_RANGE;
            let y = (x + 2.0 * b - 1.0).max(0.0);
            let (fx, fy) = (self.eval(x), self.eval(y));
            if !fx.is_finite() || fx.abs() > self.sup_bound * (1.0 + 1e-12) {
                return domain(format!("{}: |phi({x})| = {fx} exceeds sup bound {}", self.label, self.sup_bound));
            }
            let allowed = self.modulus((x - y).abs());
            if (fx - fy).abs() > allowed * (1.0 + 1e-9) + 1e-14 {
                return domain(format!(
                    "{}: Holder check failed at ({x}, {y}): |difference| = {:e} > {allowed:e}",
                    self.label,
                    (fx - fy).abs()
                ));
            }
        }
        Ok(())
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let parts: Vec<&str> = name.split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}` in multiplier `{name}`")))
        };
        match parts.as_slice() {
            ["const", c] => {
                let c = num(c)?;
                Self::new(name, 1.0, 1.0, c.abs().max(f64::MIN_POSITIVE), move |_| c)
            }
            ["poly1"] => Self::new(name, 1.0, 1.0, f64::INFINITY, |x| x),
            ["poly2"] => Self::new(name, 1.0, f64::INFINITY, f64::INFINITY, |x| x * x),
            ["cauchy"] => Self::new(name, 1.0, 1.0, 1.0, |x| 1.0 / (1.0 + x)),
            // max |d/dx e^{-x^2}| = sqrt(2) e^{-1/2}
            ["gauss"] => Self::new(name, 1.0, (2.0f64).sqrt() * (-0.5f64).exp(), 1.0, |x| (-x * x).exp()),
            ["bump", a, b] => {
                let (a, b) = (num(a)?, num(b)?);
                if !(b > a) {
                    return domain(format!("bump needs a < b, got `{name}`"));
                }
                Self::new(name, 1.0, bump_lipschitz(a, b), 1.0, move |x| bump(a, b, x))
            }
            ["indicator", ..] => domain(format!(
                "`{name}` is discontinuous; indicator multipliers are only accepted as bounded multiplier functions"
            )),
            _ => domain(format!("unknown multiplier `{name}`; valid: {LIBRARY_NAMES}")),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.func)(x)
    }

    pub fn func(&self) -> &ScalarFn {
        &self.func
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn holder_const(&self) -> f64 {
        self.holder_const
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// Modulus of continuity `holder_const * s^rho`.
    pub fn modulus(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            self.holder_const * s.powf(self.rho)
        }
    }
}

/// Smooth bump on `(a, b)` with maximum 1 at the midpoint.
pub fn bump(a: f64, b: f64, x: f64) -> f64 {
    let u = (2.0 * x - a - b) / (b - a);
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

fn bump_lipschitz(a: f64, b: f64) -> f64 {
    // |d/du exp(1 - 1/(1-u^2))| peaks inside (0, 1); a fine scan with a
    // small margin is plenty for a declared constant
    let peak = (1..100_000)
        .map(|i| {
            let u = i as f64 / 100_000.0;
            let w = 1.0 - u * u;
            (1.0 - 1.0 / w).exp() * 2.0 * u / (w * w)
        })
        .fold(0.0, f64::max);
    1.01 * peak * 2.0 / (b - a)
}

/// Bounded function supported in `[0, support_r]` with its `ds/s` mass.
#[derive(Clone)]
pub struct MultiplierFunction {
    label: String,
    func: ScalarFn,
    support_r: f64,
    integral_ds_over_s: f64,
}

impl fmt::Debug for MultiplierFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierFunction")
            .field("label", &self.label)
            .field("support_r", &self.support_r)
            .field("integral_ds_over_s", &self.integral_ds_over_s)
            .finish()
    }
}

impl MultiplierFunction {
    /// `integral` is `int_0^R |F(s)| ds/s` when known in closed form; otherwise
    /// it is computed in the variable `ln s`, and reported as `+inf` when `F`
    /// does not vanish at `0+`.
    pub fn new<F>(label: impl Into<String>, support_r: f64, integral: Option<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let label = label.into();
        if !(support_r > 0.0 && support_r.is_finite()) {
            return domain(format!("{label}: support radius must be positive, got {support_r}"));
        }
        for k in 1..=64 {
            let x = support_r * (1.0 + k as f64 / 16.0);
            if f(x) != 0.0 {
                return domain(format!("{label}: F({x}) = {} but the support ends at {support_r}", f(x)));
            }
        }
        let integral_ds_over_s = match integral {
            Some(v) => v,
            None => log_mass(&f, support_r)?,
        };
        Ok(Self { label, func: Arc::new(f), support_r, integral_ds_over_s })
    }

    /// `chi_{(a, b]}`; the `ds/s` mass is `ln(b/a)`, infinite when `a = 0`.
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b > a) {
            return domain(format!("indicator needs 0 <= a < b, got ({a}, {b})"));
        }
        let mass = if a == 0.0 { f64::INFINITY } else { (b / a).ln() };
        Self::new(format!("indicator:{a}:{b}"), b, Some(mass), move |x| if x > a && x <= b { 1.0 } else { 0.0 })
    }

    /// Library functions with bounded support: `indicator:a:b`, `bump:a:b`.
    pub fn by_name(name: &str) -> Result<Self> {
        let parts: Vec<&str> = name.split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}` in multiplier `{name}`")))
        };
        match parts.as_slice() {
            ["indicator", a, b] => Self::indicator(num(a)?, num(b)?),
            ["bump", a, b] => {
                let (a, b) = (num(a)?, num(b)?);
                if !(a >= 0.0 && b > a) {
                    return domain(format!("bump needs 0 <= a < b, got `{name}`"));
                }
                Self::new(name, b, None, move |x| bump(a, b, x))
            }
            _ => domain(format!("`{name}` is not a compactly supported multiplier; valid: indicator:a:b, bump:a:b")),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.func)(x)
    }

    pub fn func(&self) -> &ScalarFn {
        &self.func
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support_r(&self) -> f64 {
        self.support_r
    }

    pub fn integral_ds_over_s(&self) -> f64 {
        self.integral_ds_over_s
    }
}

fn log_mass<F: Fn(f64) -> f64>(f: &F, r: f64) -> Result<f64> {
    // a function that does not vanish near 0 has divergent ds/s mass
    let scale = (0..=64).map(|k| f(r * k as f64 / 64.0).abs()).fold(0.0, f64::max);
    if f(r * 1e-200).abs() > 1e-12 * scale {
        return Ok(f64::INFINITY);
    }
    let lo = r.ln() - 460.0;
    let breaks: Vec<f64> = (0..=46).map(|i| lo + 10.0 * i as f64).collect();
    let spec = QuadratureSpec { tol: 1e-12, ..QuadratureSpec::default() };
    Ok(integrate_adaptive(|u| f(u.exp()).abs(), &breaks, &spec)?.value)
}

/// Scalar function from the multiplier library, including discontinuous ones,
/// for oracle evaluation.
pub fn library_function(name: &str) -> Result<ScalarFn> {
    if name.starts_with("indicator:") {
        return Ok(MultiplierFunction::by_name(name)?.func);
    }
    Ok(HolderMultiplier::by_name(name)?.func)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn library_parses() {
        for name in ["const:7", "poly1", "poly2", "cauchy", "gauss", "bump:1:3"] {
            let m = HolderMultiplier::by_name(name).unwrap();
            assert_eq!(m.label(), name);
        }
        assert_eq!(HolderMultiplier::by_name("const:7").unwrap().eval(3.0), 7.0);
        assert_eq!(HolderMultiplier::by_name("cauchy").unwrap().eval(1.0), 0.5);
        assert_eq!(HolderMultiplier::by_name("bump:1:3").unwrap().eval(2.0), 1.0);
        assert_eq!(HolderMultiplier::by_name("bump:1:3").unwrap().eval(3.0), 0.0);
    }

    #[test]
    fn rejects_unknown_and_discontinuous() {
        let err = HolderMultiplier::by_name("sinc").unwrap_err().to_string();
        assert!(err.contains("cauchy"), "{err}");
        assert!(HolderMultiplier::by_name("indicator:1:2").is_err());
        assert!(HolderMultiplier::by_name("bump:3:1").is_err());
        assert!(HolderMultiplier::by_name("const:x").is_err());
    }

    #[test]
    fn sampled_holder_check_catches_violations() {
        // sqrt is 1/2-Holder with constant 1 but not Lipschitz
        assert!(HolderMultiplier::new("sqrt", 0.5, 1.0, 10.0, |x: f64| x.sqrt()).is_ok());
        assert!(HolderMultiplier::new("sqrt", 1.0, 1.0, 10.0, |x: f64| x.sqrt()).is_err());
        assert!(HolderMultiplier::new("big", 1.0, 1.0, 0.5, |_| 1.0).is_err());
        assert!(HolderMultiplier::new("rho", 1.5, 1.0, 1.0, |_| 0.0).is_err());
    }

    #[test]
    fn indicator_masses() {
        let r = 3.0;
        let f = MultiplierFunction::indicator(r / 2.0, r).unwrap();
        assert_relative_eq!(f.integral_ds_over_s(), 2f64.ln(), max_relative = 1e-15);
        assert_eq!(MultiplierFunction::indicator(0.0, r).unwrap().integral_ds_over_s(), f64::INFINITY);
        assert_eq!(f.eval(1.5), 0.0);
        assert_eq!(f.eval(3.0), 1.0);
    }

    #[test]
    fn computed_mass_matches_closed_form() {
        // F(s) = s on [0, 1]: int_0^1 s ds/s = 1
        let f = MultiplierFunction::new("ramp", 1.0, None, |x| if x <= 1.0 { x } else { 0.0 }).unwrap();
        assert_relative_eq!(f.integral_ds_over_s(), 1.0, max_relative = 1e-10);
        let g = MultiplierFunction::new("flat", 1.0, None, |x| if x <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(g.integral_ds_over_s(), f64::INFINITY);
        assert!(MultiplierFunction::new("leaky", 1.0, None, |_| 1.0).is_err());
    }

    #[test]
    fn library_function_covers_indicator() {
        let f = library_function("indicator:1:2").unwrap();
        assert_eq!(f(1.5), 1.0);
        assert_eq!(library_function("gauss").unwrap()(0.0), 1.0);
    }
}
