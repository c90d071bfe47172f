//! Boyd iteration against recorded brute-force `l^{4/3} -> l^4` norms.

use heatcalc_core::linalg::{opnorm_p_q, opnorm_p_q_with, sign_matrix, BoydOptions};
use nalgebra::DMatrix;

const FIXTURE: &str = include_str!("fixtures/sign_norms.csv");

fn fixture() -> Vec<(u64, DMatrix<f64>, f64)> {
    FIXTURE
        .lines()
        .skip(1)
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            let entries: Vec<f64> = cols[1].split(';').map(|v| v.parse().unwrap()).collect();
            (cols[0].parse().unwrap(), DMatrix::from_row_slice(4, 4, &entries), cols[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn fixture_matrices_come_from_the_seeded_generator() {
    for (seed, a, _) in fixture() {
        assert_eq!(sign_matrix(4, 4, seed), a, "seed {seed}");
    }
}

#[test]
fn boyd_matches_brute_force() {
    let cases = fixture();
    assert_eq!(cases.len(), 10);
    for (seed, a, oracle) in cases {
        let got = opnorm_p_q(&a, 4.0 / 3.0, 4.0).unwrap();
        assert!((got - oracle).abs() <= 1e-6 * oracle, "seed {seed}: {got} vs {oracle}");
    }
}

#[test]
fn boyd_is_seed_stable() {
    let a = sign_matrix(4, 4, 3);
    let v: Vec<f64> = (0..4)
        .map(|seed| opnorm_p_q_with(&a, 1.5, 3.0, &BoydOptions { seed, ..BoydOptions::default() }).unwrap())
        .collect();
    for w in v.windows(2) {
        assert!((w[0] - w[1]).abs() < 1e-9 * w[0]);
    }
}
