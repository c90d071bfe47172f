//! `e^{-tH}` by scaling and squaring, and the stable evaluation of
//! `H^N e^{-tH}` with a log-space scale factor.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{eigendecompose, SymmetricOperator};
use crate::error::{Error, Result};

/// Taylor degree used once the argument is scaled to 1-norm `<= 1/2`.
/// The truncation term `(1/2)^15 / 15!` is about `2e-17`.
const TAYLOR_DEGREE: usize = 14;
const SCALED_NORM: f64 = 0.5;

/// A matrix together with a scalar factor held in log-space:
/// the represented value is `exp(log_scale) * matrix`.
#[derive(Debug, Clone)]
pub struct ScaledMatrix {
    pub log_scale: f64,
    pub matrix: DMatrix<f64>,
}

impl ScaledMatrix {
    /// `ln max_ij |value_ij|`, `-inf` for the zero matrix.
    pub fn log_max_abs(&self) -> f64 {
        self.log_scale + super::max_abs(&self.matrix).ln()
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|v| *v == 0.0)
    }

    /// Materializes the value, `None` when it does not fit in `f64`.
    pub fn to_dense(&self) -> Option<DMatrix<f64>> {
        if self.is_zero() {
            return Some(self.matrix.clone());
        }
        let factor = self.log_scale.exp();
        let out = &self.matrix * factor;
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(-t A)` for a symmetric matrix by Taylor series plus repeated squaring.
pub(crate) fn expm_neg(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = t * one_norm(a);
    let squarings = if norm <= SCALED_NORM { 0 } else { (norm / SCALED_NORM).log2().ceil() as i32 };
    let y = a * (-t / 2f64.powi(squarings));
    let identity = DMatrix::<f64>::identity(n, n);
    let mut p = identity.clone();
    for k in (1..=TAYLOR_DEGREE).rev() {
        p = &identity + (&y * &p) / k as f64;
    }
    for _ in 0..squarings {
        p = &p * &p;
    }
    super::symmetrize(&mut p);
    p
}

/// `e^{-tH}` using only the matrix exponential series (no diagonalization).
pub fn heat_semigroup(h: &SymmetricOperator, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("heat semigroup needs finite t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(DMatrix::identity(h.dim(), h.dim()));
    }
    Ok(expm_neg(h.matrix(), t))
}

fn renormalize(m: &mut DMatrix<f64>, log_scale: &mut f64) {
    let s = super::max_abs(m);
    if s > 0.0 && s.is_finite() {
        *m /= s;
        *log_scale += s.ln();
    }
}

/// `H^N e^{-tH}` as a [`ScaledMatrix`].
///
/// The semigroup is split into `N` factors `C = (e t/N) H e^{-(t/N) H}`; the
/// prefactor `(e t / N)` is the reciprocal of the maximizer value of
/// `x e^{-t x / N}`, so `C` has spectrum in `[0, 1]` and the pivot
/// `(N / (e t))^N` goes into `log_scale`. `C^N` is formed by binary powering
/// with renormalization after every product.
pub fn semigroup_derivative_scaled(
    h: &SymmetricOperator,
    t: f64,
    n: u32,
) -> Result<ScaledMatrix> {
    if n == 0 {
        return Ok(ScaledMatrix { log_scale: 0.0, matrix: heat_semigroup(h, t)? });
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("H^N e^(-tH) needs t > 0 when N >= 1, got t = {t}")));
    }
    let tau = t / n as f64;
    let factor = expm_neg(h.matrix(), tau);
    let mut c = h.matrix() * factor * (std::f64::consts::E * tau);
    super::symmetrize(&mut c);
    let mut log_scale = n as f64 * (n as f64 / (std::f64::consts::E * t)).ln();
    if super::max_abs(&c) == 0.0 {
        return Ok(ScaledMatrix { log_scale: 0.0, matrix: c });
    }
    let (mut power, power_log) = power_scaled(c, n);
    super::symmetrize(&mut power);
    log_scale += power_log;
    if !log_scale.is_finite() {
        return Err(Error::Overflow { n, t });
    }
    Ok(ScaledMatrix { log_scale, matrix: power })
}

/// Dense `H^N e^{-tH}`; errors when the value overflows `f64`.
pub fn semigroup_derivative(h: &SymmetricOperator, t: f64, n: u32) -> Result<DMatrix<f64>> {
    semigroup_derivative_scaled(h, t, n)?.to_dense().ok_or(Error::Overflow { n, t })
}

fn power_scaled(base: DMatrix<f64>, exponent: u32) -> (DMatrix<f64>, f64) {
    let mut base = base;
    let mut base_log = 0.0;
    renormalize(&mut base, &mut base_log);
    let mut acc: Option<(DMatrix<f64>, f64)> = None;
    let mut e = exponent;
    loop {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => (base.clone(), base_log),
                Some((a, l)) => {
                    let mut m = a * &base;
                    let mut log = l + base_log;
                    renormalize(&mut m, &mut log);
                    (m, log)
                }
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = &base * &base;
        base_log *= 2.0;
        renormalize(&mut base, &mut base_log);
    }
    acc.expect("exponent >= 1")
}

/// `e^{-zH}` for `Re z > 0`, through the eigen-oracle.
pub fn complex_semigroup(h: &SymmetricOperator, z: Complex64) -> Result<DMatrix<Complex64>> {
    if !(z.re > 0.0) {
        return Err(Error::Domain(format!("complex semigroup needs Re z > 0, got {z}")));
    }
    Ok(eigendecompose(h)?.complex_semigroup(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{path_laplacian, symmetric_spectral_norm, torus_laplacian};
    use approx::assert_relative_eq;

    fn rel_frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn zero_time_is_identity() {
        let h = torus_laplacian(5, 1).unwrap();
        assert_eq!(heat_semigroup(&h, 0.0).unwrap(), DMatrix::identity(5, 5));
    }

    #[test]
    fn negative_time_rejected() {
        let h = torus_laplacian(3, 1).unwrap();
        assert!(matches!(heat_semigroup(&h, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn scalar_exponential() {
        let h = SymmetricOperator::diagonal("d", &[1.0]).unwrap();
        assert_relative_eq!(heat_semigroup(&h, 1.0).unwrap()[(0, 0)], (-1f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn matches_eigen_oracle_and_contracts() {
        let h = torus_laplacian(8, 1).unwrap();
        let s = eigendecompose(&h).unwrap();
        let direct = heat_semigroup(&h, 0.7).unwrap();
        let oracle = s.apply(|x| (-0.7 * x).exp()).unwrap();
        assert!((&direct - &oracle).norm() < 1e-9);
        assert!(symmetric_spectral_norm(&direct) <= 1.0 + 1e-9);
    }

    #[test]
    fn semigroup_law() {
        let h = torus_laplacian(4, 2).unwrap();
        for &(a, b) in &[(0.1, 0.3), (1.0, 2.5), (7.0, 11.0)] {
            let lhs = heat_semigroup(&h, a).unwrap() * heat_semigroup(&h, b).unwrap();
            let rhs = heat_semigroup(&h, a + b).unwrap();
            assert!((lhs - rhs).norm() <= 1e-9 * h.dim() as f64);
        }
    }

    #[test]
    fn derivative_scalar_cases() {
        let one = SymmetricOperator::diagonal("d", &[1.0]).unwrap();
        assert_relative_eq!(
            semigroup_derivative(&one, 1.0, 1).unwrap()[(0, 0)],
            (-1f64).exp(),
            max_relative = 1e-13
        );
        // 2^40 e^{-40}: log value 40 ln 2 - 40 = -12.2741127776...
        let two = SymmetricOperator::diagonal("d", &[2.0]).unwrap();
        let scaled = semigroup_derivative_scaled(&two, 20.0, 40).unwrap();
        assert_relative_eq!(scaled.log_max_abs(), 40.0 * 2f64.ln() - 40.0, max_relative = 1e-13);
        assert_relative_eq!(scaled.to_dense().unwrap()[(0, 0)], 4.671114902604e-6, max_relative = 1e-12);
    }

    #[test]
    fn derivative_n0_is_semigroup() {
        let h = torus_laplacian(6, 1).unwrap();
        assert_eq!(semigroup_derivative(&h, 0.3, 0).unwrap(), heat_semigroup(&h, 0.3).unwrap());
    }

    fn assert_oracle_grid(h: &SymmetricOperator, ts: &[f64]) {
        let s = eigendecompose(h).unwrap();
        for &t in ts {
            for n in [0u32, 1, 2, 3, 5, 8, 13, 21, 30, 45, 60] {
                let got = semigroup_derivative_scaled(h, t, n).unwrap();
                // oracle in the same log frame to avoid overflow
                let oracle = s
                    .apply(|x| {
                        if x == 0.0 {
                            if n == 0 { (-got.log_scale).exp() } else { 0.0 }
                        } else {
                            (n as f64 * x.ln() - t * x - got.log_scale).exp()
                        }
                    })
                    .unwrap();
                let err = rel_frob(&got.matrix, &oracle);
                assert!(err < 1e-8, "{} t={t} n={n} err={err:e}", h.label());
            }
        }
    }

    #[test]
    fn derivative_matches_oracle_grid() {
        assert_oracle_grid(&path_laplacian(64).unwrap(), &[0.01, 0.1, 1.0, 10.0]);
        assert_oracle_grid(&torus_laplacian(6, 3).unwrap(), &[0.01, 0.1, 1.0]);
    }

    // With a zero mode, H e^{-tH} at large t is a cancellation: the kernel
    // carries weight 1 in e^{-tH} while the answer is of size
    // lambda_min e^{-t lambda_min}. Relative accuracy is then limited to about
    // eps * |H| / (lambda_min e^{-t lambda_min}), and one more factor of H
    // already restores it.
    #[test]
    fn zero_mode_cancellation_limit() {
        let h = torus_laplacian(4, 3).unwrap();
        let s = eigendecompose(&h).unwrap();
        let t = 10.0;
        let lmin = s.lambda_min_positive().unwrap();
        let limit = f64::EPSILON * s.lambda_max() / (lmin * (-t * lmin).exp());
        for n in [1u32, 2] {
            let got = semigroup_derivative(&h, t, n).unwrap();
            let oracle = s.apply(|x| x.powi(n as i32) * (-t * x).exp()).unwrap();
            let err = rel_frob(&got, &oracle);
            assert!(err < 10.0 * limit, "n={n} err={err:e} limit={limit:e}");
        }
    }

    #[test]
    fn zero_operator_derivative_vanishes() {
        let h = SymmetricOperator::diagonal("z", &[0.0]).unwrap();
        let d = semigroup_derivative(&h, 1.0, 3).unwrap();
        assert_eq!(d[(0, 0)], 0.0);
    }

    #[test]
    fn complex_time() {
        let h = SymmetricOperator::diagonal("d", &[2.0]).unwrap();
        let z = Complex64::new(1.0, 1.0);
        let e = complex_semigroup(&h, z).unwrap()[(0, 0)];
        let expected = Complex64::new(-2.0, -2.0).exp();
        assert!((e - expected).norm() < 1e-15);
        assert!(complex_semigroup(&h, Complex64::new(0.0, 1.0)).is_err());

        let t = torus_laplacian(4, 2).unwrap();
        let real = complex_semigroup(&t, Complex64::new(1.0, 0.0)).unwrap().map(|c| c.re);
        assert!((real - heat_semigroup(&t, 1.0).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn complex_conjugation_symmetry() {
        let h = torus_laplacian(4, 3).unwrap();
        let z = Complex64::new(0.5, 3.0);
        let a = complex_semigroup(&h, z).unwrap();
        let b = complex_semigroup(&h, z.conj()).unwrap();
        assert!((a.map(|c| c.conj()) - b).norm() < 1e-12);
        assert!(a.norm() <= (h.dim() as f64).sqrt() + 1e-12);
    }
}
