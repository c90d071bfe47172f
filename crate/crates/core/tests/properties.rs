use heatcalc_core::gamma_kernel::{mu_n, weight};
use heatcalc_core::linalg::{
    conjugate, heat_semigroup, opnorm_p_q, sign_matrix, symmetric_spectral_norm, torus_laplacian,
};
use heatcalc_core::quadrature::{integrate_adaptive, QuadratureSpec};
use proptest::prelude::*;

/// `1 <= p <= q <= inf` with both ends included; the range covered by the
/// exact formulas and the power iteration.
fn exponent_pair() -> impl Strategy<Value = (f64, f64)> {
    (prop_oneof![Just(1.0), 1.05f64..3.0], prop_oneof![1.05f64..3.0, Just(f64::INFINITY)])
        .prop_map(|(p, q)| if p <= q { (p, q) } else { (q, p) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_duality(seed in 0u64..1000, (p, q) in exponent_pair()) {
        let a = sign_matrix(3, 4, seed);
        let lhs = opnorm_p_q(&a, p, q).unwrap();
        let rhs = opnorm_p_q(&a.transpose(), conjugate(q), conjugate(p)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-6 * lhs, "{lhs} vs {rhs}");
    }

    #[test]
    fn norm_decreases_in_target_exponent(seed in 0u64..1000, p in prop_oneof![Just(1.0), 1.05f64..2.0], dq in 0.1f64..2.0) {
        let q = p + 0.5;
        let a = sign_matrix(4, 4, seed);
        let small = opnorm_p_q(&a, p, q).unwrap();
        let large = opnorm_p_q(&a, p, q + dq).unwrap();
        prop_assert!(large <= small * (1.0 + 1e-9));
    }

    #[test]
    fn semigroup_law(s in 0.01f64..3.0, t in 0.01f64..3.0) {
        let h = torus_laplacian(5, 2).unwrap();
        let lhs = heat_semigroup(&h, s + t).unwrap();
        let rhs = heat_semigroup(&h, s).unwrap() * heat_semigroup(&h, t).unwrap();
        prop_assert!((&lhs - &rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        // contraction on l^2
        prop_assert!(symmetric_spectral_norm(&lhs) <= 1.0 + 1e-12);
    }

    #[test]
    fn kernel_reproduces_linear_functions(n in 2u32..400, lambda in 0.05f64..20.0) {
        let v = mu_n(&|mu| mu, n, lambda, &QuadratureSpec::default()).unwrap();
        prop_assert!((v - lambda).abs() <= 1e-9 * lambda);
    }

    #[test]
    fn kernel_mass_is_one(n in 2u32..300) {
        let nf = n as f64;
        let w = 12.0 * nf.sqrt();
        let spec = QuadratureSpec { tol: 1e-12, ..QuadratureSpec::default() };
        let lo = (nf - w).max(0.0);
        let mass = integrate_adaptive(|x| weight(n, x) / x, &[lo, nf, nf + w], &spec).unwrap().value;
        prop_assert!((mass - 1.0).abs() < 1e-10, "N={n} mass={mass}");
    }
}
