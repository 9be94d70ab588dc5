use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("operator is not Hermitian (max |H_ij - conj(H_ji)| = {residual:e})")]
    NonHermitian { residual: f64 },

    #[error("{what} did not converge (residual {residual:e})")]
    NotConverged { what: &'static str, residual: f64 },

    #[error("flat spectrum: all eigenvalues coincide")]
    FlatSpectrum,

    #[error("step exceeds horizon (dt = {dt}, T = {horizon})")]
    StepExceedsHorizon { dt: f64, horizon: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid bipartition: {0}")]
    InvalidCut(String),

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("unknown model tag `{0}`")]
    UnknownModel(String),

    #[error("coordinate singularity of the (theta, phi) chart: sin(theta) = {sin_theta:e}{}", at_s(.s))]
    Pole { s: Option<f64>, sin_theta: f64 },

    #[error("point is not stationary under the variational flow (|X| = {residual:e})")]
    NotStationary { residual: f64 },

    #[error("non-diagonalizable within tolerance (eigenvector condition number {condition:e})")]
    NonDiagonalizable { condition: f64 },

    #[error(
        "pseudo-metric check failed (residual {residual:e}, min eigenvalue {min_eigenvalue:e})"
    )]
    PseudoMetric { residual: f64, min_eigenvalue: f64 },

    #[error("insufficient effective space at site {site} (dimension {dim})")]
    InsufficientEffectiveSpace { site: usize, dim: usize },

    #[error("local solver failed at site {site}: {reason}")]
    LocalSolver { site: usize, reason: &'static str },

    #[error("state of {sites} sites exceeds the dense contraction limit")]
    DimensionOverflow { sites: usize },

    #[error("model {model} does not support {operation}")]
    Unsupported {
        model: &'static str,
        operation: &'static str,
    },
}

fn at_s(s: &Option<f64>) -> String {
    match s {
        Some(s) => alloc::format!(" at s = {s}"),
        None => String::new(),
    }
}
