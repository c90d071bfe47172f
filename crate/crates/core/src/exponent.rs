//! Exponent bookkeeping for `L^p -> L^{p'}` estimates.

use crate::error::{Error, Result};
use crate::linalg::conjugate;

/// `(p, d)` with the dual exponent and `sigma = (d/2)(1/p - 1/p')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentConfig {
    p: f64,
    d: f64,
}

impl ExponentConfig {
    pub fn new(p: f64, d: f64) -> Result<Self> {
        if !(1.0..2.0).contains(&p) {
            return Err(Error::Domain(format!("p must lie in [1, 2), got {p}")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Domain(format!("d must be positive and finite, got {d}")));
        }
        Ok(Self { p, d })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Dual exponent; `f64::INFINITY` when `p = 1`.
    pub fn p_prime(&self) -> f64 {
        conjugate(self.p)
    }

    /// `1/p - 1/p'`, computed as `2/p - 1` so that it never goes through `p'`.
    pub fn gap(&self) -> f64 {
        2.0 / self.p - 1.0
    }

    pub fn sigma(&self) -> f64 {
        0.5 * self.d * self.gap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let c = ExponentConfig::new(1.0, 2.0).unwrap();
        assert_eq!(c.p_prime(), f64::INFINITY);
        assert_eq!(c.sigma(), 1.0);
        let c = ExponentConfig::new(1.2, 3.0).unwrap();
        assert_relative_eq!(c.p_prime(), 6.0, max_relative = 1e-14);
        assert_relative_eq!(c.sigma(), 1.0, max_relative = 1e-14);
        assert_eq!(ExponentConfig::new(1.0, 3.0).unwrap().sigma(), 1.5);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ExponentConfig::new(2.0, 1.0).is_err());
        assert!(ExponentConfig::new(0.9, 1.0).is_err());
        assert!(ExponentConfig::new(2.5, 1.0).is_err());
        assert!(ExponentConfig::new(1.5, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn conjugate_identity(p in 1.0f64..1.999, d in 0.1f64..10.0) {
            let c = ExponentConfig::new(p, d).unwrap();
            let inv_pp = if c.p_prime().is_infinite() { 0.0 } else { 1.0 / c.p_prime() };
            prop_assert!((1.0 / p + inv_pp - 1.0).abs() < 1e-12);
            prop_assert!((c.sigma() - 0.5 * d * (1.0 / p - inv_pp)).abs() < 1e-12 * d.max(1.0));
            prop_assert!(c.sigma() >= 0.0);
        }
    }
}
