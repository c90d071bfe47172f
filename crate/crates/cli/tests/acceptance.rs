//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test -p heatcalc-cli --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use heatcalc_core::calculus::{calculus_report, density_trace, CalculusOptions};
use heatcalc_core::dispersive::{
    angular_integral, cauchy_derivative_analytic, cauchy_derivative_formula, contour_power, power_oracle,
    subordinated_fractional, subordination_oracle, ContourSpec,
};
use heatcalc_core::exponent::ExponentConfig;
use heatcalc_core::gamma_kernel::{log_norm_const, mu_n, weight, GammaKernel};
use heatcalc_core::linalg::{eigendecompose, opnorm_p_q, sign_matrix, torus_laplacian};
use heatcalc_core::multiplier::HolderMultiplier;
use heatcalc_core::quadrature::{integrate_adaptive, QuadratureSpec};
use heatcalc_core::restriction::{
    band_projector_norm_with, check_derivative_bound, default_n_grid, default_t_grid, stirling_ratio, NormMode,
};
use nalgebra::DMatrix;
use num_complex::Complex64;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rel_frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn kernel_normalization() -> Outcome {
    let spec = QuadratureSpec { tol: 1e-12, ..QuadratureSpec::default() };
    let mut worst: f64 = 0.0;
    for n in 2..=200u32 {
        let nf = n as f64;
        let (lo, hi) = ((nf - 20.0 * nf.sqrt()).max(0.0), nf + 20.0 * nf.sqrt() + 40.0);
        // w_N(x) / x peaks at x = N - 1
        let mass = integrate_adaptive(|x| weight(n, x) / x, &[lo, nf - 1.0, hi], &spec).map_err(err)?.value;
        let through_kernel = mu_n(&|_| 1.0, n, 1.0, &QuadratureSpec::default()).map_err(err)?;
        worst = worst.max((mass - 1.0).abs()).max((through_kernel - 1.0).abs());
    }
    ensure(worst < 1e-10, || format!("max |mass - 1| = {worst:e}"))?;
    Ok(format!("max |mass - 1| = {worst:.1e} over N = 2..200"))
}

fn monomial_exactness() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for n in [2u32, 10, 100] {
        for l in [0.5, 1.0, 4.0] {
            worst = worst.max((mu_n(&|m| m, n, l, &spec).map_err(err)? - l).abs());
        }
    }
    for n in [3u32, 10, 100] {
        let nf = n as f64;
        let v = mu_n(&|m| m * m, n, 1.0, &spec).map_err(err)?;
        worst = worst.max((v - (nf - 1.0) / (nf - 2.0)).abs());
    }
    ensure(worst < 1e-9, || format!("max error {worst:e}"))?;
    Ok(format!("max error {worst:.1e}"))
}

fn theorem_convergence() -> Outcome {
    let phi = |m: f64| 1.0 / (1.0 + m);
    let spec = QuadratureSpec::default();
    let mut finals = Vec::new();
    for l in [0.5, 1.0, 4.0] {
        let errs: Vec<f64> = [16u32, 64, 256, 1024, 4096]
            .iter()
            .map(|&n| mu_n(&phi, n, l, &spec).map(|v| (v - phi(l)).abs()))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        ensure(errs.windows(2).all(|w| w[1] < w[0]), || format!("lambda = {l}: errors not decreasing {errs:?}"))?;
        let last = *errs.last().unwrap();
        ensure(last < 1e-3, || format!("lambda = {l}: final error {last:e}"))?;
        finals.push(last);
    }
    Ok(format!("final errors {:.2e}, {:.2e}, {:.2e}", finals[0], finals[1], finals[2]))
}

fn operator_oracle() -> Outcome {
    let phi = HolderMultiplier::by_name("cauchy").map_err(err)?;
    let mut parts = Vec::new();
    for (n, d) in [(8usize, 1usize), (64, 1)] {
        let h = torus_laplacian(n, d).map_err(err)?;
        let s = eigendecompose(&h).map_err(err)?;
        let kernel = GammaKernel::theorem(256).map_err(err)?;
        let r = calculus_report(&h, &s, &kernel, 256, 1.0, &phi, &CalculusOptions::default()).map_err(err)?;
        ensure(r.approx_error_2 <= r.scalar_sup_error + 1e-8, || {
            format!("torus:{n}:{d}: {:e} > {:e} + 1e-8", r.approx_error_2, r.scalar_sup_error)
        })?;
        parts.push(format!("dim {}: {:.3e} <= {:.3e}", h.dim(), r.approx_error_2, r.scalar_sup_error));
    }
    Ok(parts.join("; "))
}

fn density_surrogate() -> Outcome {
    let h = torus_laplacian(32, 1).map_err(err)?;
    let s = eigendecompose(&h).map_err(err)?;
    let n = 200;
    // integrate in u = ln(lambda), with breakpoints at each level
    let lo = (s.lambda_min_positive().unwrap() / 4.0).ln();
    let mut breaks: Vec<f64> = s.distinct_eigenvalues().into_iter().filter(|&m| m > 0.0).map(f64::ln).collect();
    breaks.insert(0, lo);
    breaks.push(8f64.ln());
    let spec = QuadratureSpec { tol: 1e-8, ..QuadratureSpec::default() };
    let total = integrate_adaptive(
        |u| {
            let l = u.exp();
            density_trace(&s, l, n, 0).unwrap() * l
        },
        &breaks,
        &spec,
    )
    .map_err(err)?
    .value;
    let positive = (s.dim() - s.kernel_dim()) as f64;
    ensure((total - positive).abs() <= 0.02 * positive, || format!("integral {total} vs {positive}"))?;
    let mut worst: f64 = 0.0;
    for l in [0.5, 1.0, 2.0] {
        let hstep = 1e-4 * l;
        let fd = (density_trace(&s, l + hstep, n, 0).map_err(err)? - density_trace(&s, l - hstep, n, 0).map_err(err)?)
            / (2.0 * hstep);
        let d1 = density_trace(&s, l, n, 1).map_err(err)?;
        worst = worst.max((d1 - fd).abs() / d1.abs());
    }
    ensure(worst < 1e-5, || format!("k = 1 vs finite difference: {worst:e}"))?;
    Ok(format!("integral {total:.6} vs {positive}; k = 1 vs FD rel {worst:.1e}"))
}

fn assertion_two() -> Outcome {
    let h = torus_laplacian(16, 1).map_err(err)?;
    let cfg = ExponentConfig::new(1.0, 1.0).map_err(err)?;
    let rep = check_derivative_bound(&h, &cfg, &default_n_grid(), &default_t_grid(), &NormMode::Exact).map_err(err)?;
    let sup = rep.sup_ratio();
    let low = rep.sup_where(|r| r.param1 <= 20.0);
    let high = rep.sup_where(|r| r.param1 >= 21.0);
    ensure(sup.is_finite(), || "supRatio not finite".into())?;
    ensure(high <= 2.0 * low, || format!("max over N > 20 is {high}, over N <= 20 is {low}"))?;
    Ok(format!("supRatio {sup:.4}; max N<=20 {low:.4}, N>20 {high:.4}"))
}

fn dyadic_band() -> Outcome {
    let h = torus_laplacian(256, 1).map_err(err)?;
    let s = eigendecompose(&h).map_err(err)?;
    let cfg = ExponentConfig::new(1.0, 1.0).map_err(err)?;
    let vals: Vec<f64> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&l| band_projector_norm_with(&s, l, l / 8.0, &cfg, &NormMode::Exact).map(|b| b * l.powf(1.0 - cfg.sigma())))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let (lo, hi) = (vals.iter().cloned().fold(f64::INFINITY, f64::min), vals.iter().cloned().fold(0.0, f64::max));
    ensure(lo > 0.0 && hi <= 4.0 * lo, || format!("values {vals:?}"))?;
    Ok(format!("values {:.4}, {:.4}, {:.4}; spread {:.3}", vals[0], vals[1], vals[2], hi / lo))
}

fn stirling() -> Outcome {
    let mut fact = 1.0f64; // (N-1)!, exact in f64 up to 17!
    let mut worst: f64 = 0.0;
    for n in 2..=18u32 {
        fact *= (n - 1) as f64;
        let v = log_norm_const(n, 1.0).map_err(err)?.exp();
        worst = worst.max((v * fact - 1.0).abs());
    }
    ensure(worst < 1e-12, || format!("max rel error {worst:e}"))?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..=9900 {
        let r = stirling_ratio(1.0 + i as f64 / 100.0);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    ensure(lo >= 1.0 && hi <= 1.09, || format!("ratio range [{lo}, {hi}]"))?;
    Ok(format!("factorials rel {worst:.1e}; ratio in [{lo:.6}, {hi:.6}]"))
}

fn contour_identity() -> Outcome {
    let h = torus_laplacian(4, 3).map_err(err)?;
    let s = eigendecompose(&h).map_err(err)?;
    let mut worst: f64 = 0.0;
    for n in 2..=12u32 {
        let spec = ContourSpec::new(n, 2048).map_err(err)?;
        for sv in [0.1, 0.25] {
            let c = contour_power(&h, sv, &spec, 1.0, 2).map_err(err)?;
            worst = worst.max(rel_frob(&c, &power_oracle(&s, n, sv, 1.0).map_err(err)?));
        }
    }
    ensure(worst < 1e-6, || format!("max rel error {worst:e}"))?;
    Ok(format!("max rel error {worst:.1e}"))
}

fn subordination() -> Outcome {
    let h = torus_laplacian(4, 2).map_err(err)?;
    let s = eigendecompose(&h).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for g in [0.25, 0.5, 0.75] {
        for k in 1..=3u32 {
            for re in [1.0, 2.0, 5.0] {
                let z = Complex64::new(re, 0.5);
                let got = subordinated_fractional(&h, 0.5, z, g, k).map_err(err)?;
                let want = subordination_oracle(&s, 0.5, z, g);
                worst = worst.max((&got - &want).norm() / want.norm());
                count += 1;
            }
        }
    }
    ensure(worst < 1e-6, || format!("max rel error {worst:e}"))?;
    Ok(format!("{count} cases, max rel error {worst:.1e}"))
}

fn cauchy_derivative() -> Outcome {
    let one = heatcalc_core::SymmetricOperator::diagonal("d", &[1.0]).map_err(err)?;
    let v = cauchy_derivative_formula(&one, 1.0, &ContourSpec::new(2, 2048).map_err(err)?).map_err(err)?[(0, 0)];
    let exact = -32.0 * (-2f64).exp();
    ensure(((v - exact) / exact).abs() < 1e-6, || format!("scalar {v} vs {exact}"))?;
    let h = torus_laplacian(4, 2).map_err(err)?;
    let s = eigendecompose(&h).map_err(err)?;
    let c = cauchy_derivative_formula(&h, 2.0, &ContourSpec::new(8, 2048).map_err(err)?).map_err(err)?;
    let e = rel_frob(&c, &cauchy_derivative_analytic(&s, 8, 2.0).map_err(err)?);
    ensure(e < 1e-6, || format!("torus:4:2 rel error {e:e}"))?;
    Ok(format!("scalar {v:.10} (exact {exact:.10}); torus:4:2 rel {e:.1e}"))
}

fn angular() -> Outcome {
    let mut parts = Vec::new();
    for sigma in [1.25, 1.5, 2.0] {
        let v: Vec<f64> =
            (2..=200u32).map(|n| angular_integral(n, sigma).map(|i| i * n as f64)).collect::<Result<_, _>>().map_err(err)?;
        let (lo, hi) = (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(0.0, f64::max));
        ensure(hi <= 2.0 * lo, || format!("sigma = {sigma}: N*I in [{lo}, {hi}]"))?;
        parts.push(format!("sigma {sigma}: ratio {:.3}", hi / lo));
    }
    Ok(parts.join("; "))
}

fn norm_oracle() -> Outcome {
    let fixture = include_str!("../../core/tests/fixtures/sign_norms.csv");
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for line in fixture.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let seed: u64 = cols[0].parse().map_err(err)?;
        let oracle: f64 = cols[2].parse().map_err(err)?;
        let a = sign_matrix(4, 4, seed);
        let got = opnorm_p_q(&a, 4.0 / 3.0, 4.0).map_err(err)?;
        worst = worst.max((got - oracle).abs() / oracle);
        count += 1;
    }
    ensure(count == 10 && worst < 1e-6, || format!("{count} matrices, max rel error {worst:e}"))?;
    Ok(format!("{count} matrices, max rel error {worst:.1e}"))
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("heatcalc-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(err)?;
    let runs: [&[&str]; 2] = [
        &["--command", "restriction-check", "--operator", "torus:6:1", "--p", "1.5", "--d", "1", "--n-grid", "1..6", "--seed", "7"],
        &["--command", "calculus-approx", "--operator", "torus:8:1", "--multiplier", "cauchy", "--n-grid", "16,64"],
    ];
    let mut checked = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for (j, threads) in [1, 4, 4].iter().enumerate() {
            let out = dir.join(format!("run{i}-{j}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_heatcalc"))
                .args(*args)
                .arg("--out")
                .arg(&out)
                .env("RAYON_NUM_THREADS", threads.to_string())
                .output()
                .map_err(err)?;
            ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
            outputs.push(std::fs::read(&out).map_err(err)?);
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || format!("{} differs between runs", args[1]))?;
        checked += outputs[0].len();
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("2 commands x 3 runs byte-identical ({checked} bytes)"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "kernel normalization", budget: Duration::from_secs(1), check: kernel_normalization },
        Criterion { id: 2, name: "monomial exactness", budget: Duration::from_secs(5), check: monomial_exactness },
        Criterion { id: 3, name: "scalar kernel convergence", budget: Duration::from_secs(10), check: theorem_convergence },
        Criterion { id: 4, name: "operator vs oracle", budget: Duration::from_secs(150), check: operator_oracle },
        Criterion { id: 5, name: "smoothed density surrogate", budget: Duration::from_secs(60), check: density_surrogate },
        Criterion { id: 6, name: "derivative ratio has no growth", budget: Duration::from_secs(120), check: assertion_two },
        Criterion { id: 7, name: "dyadic band scaling", budget: Duration::from_secs(60), check: dyadic_band },
        Criterion { id: 8, name: "Stirling normalisation", budget: Duration::from_secs(5), check: stirling },
        Criterion { id: 9, name: "contour identity", budget: Duration::from_secs(60), check: contour_identity },
        Criterion { id: 10, name: "subordination identity", budget: Duration::from_secs(30), check: subordination },
        Criterion { id: 11, name: "Cauchy derivative", budget: Duration::from_secs(30), check: cauchy_derivative },
        Criterion { id: 12, name: "angular integral decay", budget: Duration::from_secs(30), check: angular },
        Criterion { id: 13, name: "p->q norm oracle", budget: Duration::from_secs(30), check: norm_oracle },
        Criterion { id: 14, name: "CLI determinism", budget: Duration::from_secs(120), check: determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.check)();
        let took = start.elapsed();
        let result = match result {
            Ok(detail) if took > c.budget => Err(format!("{detail}; exceeded {:?} budget", c.budget)),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {:>2} {}: {detail} ({:.2} s)", c.id, c.name, took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {}: {why} ({:.2} s)", c.id, c.name, took.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
