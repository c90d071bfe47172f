use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("operator `{label}` is not symmetric: |a[{i},{j}] - a[{j},{i}]| = {defect:e}")]
    NotSymmetric {
        label: String,
        i: usize,
        j: usize,
        defect: f64,
    },

    #[error("operator `{label}` is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    NotPositive { label: String, eigenvalue: f64 },

    #[error("symmetric eigensolver did not converge for `{label}` within {max_iter} iterations")]
    NoConvergence { label: String, max_iter: usize },

    #[error("function is not finite at eigenvalue {eigenvalue:e} (value {value})")]
    NonFinite { eigenvalue: f64, value: f64 },

    #[error("overflow evaluating H^{n} e^(-tH) at t = {t:e}")]
    Overflow { n: u32, t: f64 },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("quadrature missed its target {target:e}: achieved error estimate {achieved:e}")]
    Quadrature { target: f64, achieved: f64 },

    #[error("contour sum unresolved with {nodes} nodes (relative residue {residue:e}); retry with more nodes")]
    ContourResolution { residue: f64, nodes: usize },

    #[error("derivative order {0} is not supported (maximum 4)")]
    UnsupportedOrder(u32),

    #[error("degenerate window: epsilon_N = {epsilon} for N = {n}")]
    DegenerateWindow { n: u32, epsilon: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
