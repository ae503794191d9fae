use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum FracError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too small: need at least {need} nodes, got {got}")]
    GridTooSmall { need: usize, got: usize },

    #[error("point {x} lies outside the closed domain")]
    OutsideDomain { x: f64 },

    #[error("window aliasing: edge magnitude {edge:.3e} exceeds guard {guard:.3e}")]
    Aliasing { edge: f64, guard: f64 },

    #[error("symbol rejected: strong-ellipticity lower bound {c0:.6e} is not positive")]
    NotStronglyElliptic { c0: f64 },

    #[error("boundary exponent mismatch: fitted {fitted:.4} vs expected {expected:.4}")]
    ExponentMismatch { fitted: f64, expected: f64 },

    #[error("{0} is an eigenvalue within tolerance; use the Fredholm solver")]
    SpectrumHit(String),

    #[error("calibration failed to converge: {0}")]
    Calibration(String),

    #[error("eigenvalue solver failed: {0}")]
    EigenSolver(String),

    #[error("inconsistent verdicts in kernel membership: trace test {trace_zero}, class test {class_fits}")]
    InconsistentVerdicts { trace_zero: bool, class_fits: bool },

    #[error(
        "L2-framed large-solution problems require a > 1/2: the d^(a-1) boundary \
         profile is square-integrable only then (equivalently q < 1/(1-a) with q = 2); got a = {a}"
    )]
    LargeSolutionInadmissible { a: f64 },

    #[error("low-confidence exponent fit: r^2 = {r2:.4} < 0.99")]
    LowConfidenceFit { r2: f64 },

    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, FracError>;
