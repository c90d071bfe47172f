//! Counting-measure operator norms `||A||_{l^p -> l^q}`.
//!
//! Exact formulas cover `p = 1`, `q = inf` and `p = q = 2`. Everything else
//! goes through Boyd's nonlinear power iteration, which returns the value of
//! an attained point and therefore a lower bound.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Conjugate exponent, with `1 <-> inf`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub fn is_exact_pair(p: f64, q: f64) -> bool {
    p == 1.0 || q.is_infinite() || (p == 2.0 && q == 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoydOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for BoydOptions {
    fn default() -> Self {
        Self { restarts: 64, tol: 1e-12, max_iter: 10_000, seed: 0 }
    }
}

fn vec_norm<'a>(values: impl Iterator<Item = &'a f64>, r: f64) -> f64 {
    if r.is_infinite() {
        values.fold(0.0, |m, v| m.max(v.abs()))
    } else if r == 1.0 {
        values.map(|v| v.abs()).sum()
    } else if r == 2.0 {
        values.map(|v| v * v).sum::<f64>().sqrt()
    } else {
        // scale by the max entry so |v|^r stays representable
        let v: Vec<f64> = values.map(|v| v.abs()).collect();
        let m = v.iter().cloned().fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|x| (x / m).powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

fn check_exponent(name: &str, r: f64) -> Result<()> {
    if r.is_nan() || r < 1.0 {
        return Err(Error::Domain(format!("exponent {name} = {r} must be in [1, inf]")));
    }
    Ok(())
}

pub fn opnorm_p_q(a: &DMatrix<f64>, p: f64, q: f64) -> Result<f64> {
    opnorm_p_q_with(a, p, q, &BoydOptions::default())
}

pub fn opnorm_p_q_with(a: &DMatrix<f64>, p: f64, q: f64, opts: &BoydOptions) -> Result<f64> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("operator norm of a matrix with non-finite entries".into()));
    }
    if p == 1.0 {
        return Ok(a.column_iter().map(|c| vec_norm(c.iter(), q)).fold(0.0, f64::max));
    }
    if q.is_infinite() {
        let pp = conjugate(p);
        return Ok(a.row_iter().map(|r| vec_norm(r.iter(), pp)).fold(0.0, f64::max));
    }
    if p == 2.0 && q == 2.0 {
        return Ok(a.clone().singular_values().iter().cloned().fold(0.0, f64::max));
    }
    if p.is_infinite() || q == 1.0 {
        return Err(Error::Domain(format!(
            "no exact formula or power iteration for p = {p}, q = {q}"
        )));
    }
    Ok(boyd(a, p, q, opts))
}

fn dual_map(v: &DVector<f64>, r: f64) -> DVector<f64> {
    let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return v.clone();
    }
    v.map(|x| x.signum() * (x.abs() / m).powf(r - 1.0))
}

fn normalized(x: DVector<f64>, p: f64) -> Option<DVector<f64>> {
    let n = vec_norm(x.iter(), p);
    (n > 0.0 && n.is_finite()).then(|| x / n)
}

fn boyd_from(a: &DMatrix<f64>, at: &DMatrix<f64>, p: f64, q: f64, x0: DVector<f64>, opts: &BoydOptions) -> f64 {
    let pp = conjugate(p);
    let Some(mut x) = normalized(x0, p) else { return 0.0 };
    let mut value = vec_norm((a * &x).iter(), q);
    for _ in 0..opts.max_iter {
        let y = a * &x;
        let z = at * dual_map(&y, q);
        let Some(next) = normalized(dual_map(&z, pp), p) else { break };
        let next_value = vec_norm((a * &next).iter(), q);
        x = next;
        let done = (next_value - value).abs() <= opts.tol * next_value.max(f64::MIN_POSITIVE);
        value = value.max(next_value);
        if done {
            break;
        }
    }
    value
}

fn boyd(a: &DMatrix<f64>, p: f64, q: f64, opts: &BoydOptions) -> f64 {
    let n = a.ncols();
    let at = a.transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<DVector<f64>> = (0..n)
        .map(|j| DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 }))
        .collect();
    starts.push(DVector::from_element(n, 1.0));
    for _ in 0..opts.restarts {
        starts.push(DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
    }
    starts
        .into_iter()
        .map(|x0| boyd_from(a, &at, p, q, x0, opts))
        .fold(0.0, f64::max)
}

/// Exact `l^p -> l^q` norms of a complex matrix (`p = 1`, `q = inf`, or `p = q = 2`).
pub fn opnorm_complex(a: &DMatrix<Complex64>, p: f64, q: f64) -> Result<f64> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let moduli = a.map(|z| z.norm());
    if p == 1.0 || q.is_infinite() {
        return opnorm_p_q(&moduli, p, q);
    }
    if p == 2.0 && q == 2.0 {
        return Ok(a.clone().singular_values().iter().cloned().fold(0.0, f64::max));
    }
    Err(Error::Domain(format!("complex operator norm only exact for p = 1 or q = inf, got ({p}, {q})")))
}
