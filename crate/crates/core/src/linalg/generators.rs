use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{eigendecompose, read_matrix_file, SymmetricOperator};
use crate::error::{Error, Result};

pub const DEFAULT_DIM_CAP: usize = 4096;

pub fn torus_laplacian(n: usize, d: usize) -> Result<SymmetricOperator> {
    torus_laplacian_capped(n, d, DEFAULT_DIM_CAP)
}

/// Graph Laplacian of the discrete torus `(Z/nZ)^d`: the `d`-fold Kronecker sum
/// of the `n`-cycle Laplacian. Eigenvalues are `sum_i 4 sin^2(pi k_i / n)`.
pub fn torus_laplacian_capped(n: usize, d: usize, cap: usize) -> Result<SymmetricOperator> {
    if n < 2 || d < 1 {
        return Err(Error::Domain(format!("torus needs n >= 2 and d >= 1, got n = {n}, d = {d}")));
    }
    let dim = n
        .checked_pow(d as u32)
        .filter(|&dim| dim <= cap)
        .ok_or(Error::DimensionCap { dim: n.saturating_pow(d as u32), cap })?;
    let mut m = DMatrix::zeros(dim, dim);
    for idx in 0..dim {
        let mut stride = 1;
        for _ in 0..d {
            let coord = (idx / stride) % n;
            let up = idx - coord * stride + ((coord + 1) % n) * stride;
            let down = idx - coord * stride + ((coord + n - 1) % n) * stride;
            m[(idx, idx)] += 2.0;
            m[(idx, up)] -= 1.0;
            m[(idx, down)] -= 1.0;
            stride *= n;
        }
    }
    SymmetricOperator::new(format!("torus:{n}:{d}"), m)
}

/// Dirichlet path Laplacian `tridiag(-1, 2, -1)`; eigenvalues
/// `4 sin^2(pi k / (2 (n + 1)))`, `k = 1..n`.
pub fn path_laplacian(n: usize) -> Result<SymmetricOperator> {
    if n < 1 {
        return Err(Error::Domain("path Laplacian needs n >= 1".into()));
    }
    if n > DEFAULT_DIM_CAP {
        return Err(Error::DimensionCap { dim: n, cap: DEFAULT_DIM_CAP });
    }
    let m = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    });
    SymmetricOperator::new(format!("path:{n}"), m)
}

/// Matrix of independent `+-1` entries drawn from a seeded ChaCha8 stream, row-major.
pub fn sign_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_row_iterator(rows, cols, (0..rows * cols).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }))
}

/// `H^alpha` through the eigen-oracle.
pub fn fractional_power(h: &SymmetricOperator, alpha: f64) -> Result<SymmetricOperator> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("fractional power needs alpha > 0, got {alpha}")));
    }
    let s = eigendecompose(h)?;
    let m = s.apply(|x| if x == 0.0 { 0.0 } else { x.powf(alpha) })?;
    SymmetricOperator::new(format!("fracpow:{alpha}:{}", h.label()), m)
}

pub fn parse_generator(spec: &str) -> Result<SymmetricOperator> {
    parse_generator_capped(spec, DEFAULT_DIM_CAP)
}

/// Builds an operator from a generator string:
/// `torus:n:d`, `path:n`, `fracpow:alpha:<inner>`, `diag:v1,v2,...`, `file:<path>`.
pub fn parse_generator_capped(spec: &str, cap: usize) -> Result<SymmetricOperator> {
    let bad = |why: &str| {
        Error::Parse(format!(
            "bad operator `{spec}`: {why}; expected torus:n:d, path:n, fracpow:alpha:<inner>, diag:v1,v2,... or file:<path>"
        ))
    };
    let (kind, rest) = spec.split_once(':').ok_or_else(|| bad("missing `:`"))?;
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(&format!("`{s}` is not an integer")));
    match kind {
        "torus" => {
            let (n, d) = rest.split_once(':').ok_or_else(|| bad("torus needs n and d"))?;
            torus_laplacian_capped(int(n)?, int(d)?, cap)
        }
        "path" => path_laplacian(int(rest)?),
        "fracpow" => {
            let (alpha, inner) = rest.split_once(':').ok_or_else(|| bad("fracpow needs alpha and an inner generator"))?;
            let alpha: f64 = alpha.parse().map_err(|_| bad(&format!("`{alpha}` is not a number")))?;
            fractional_power(&parse_generator_capped(inner, cap)?, alpha)
        }
        "diag" => {
            let values = rest
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad(&format!("`{v}` is not a number"))))
                .collect::<Result<Vec<_>>>()?;
            SymmetricOperator::diagonal(spec, &values)
        }
        "file" => Ok(read_matrix_file(rest)?.with_label(spec)),
        _ => Err(bad(&format!("unknown generator `{kind}`"))),
    }
}
