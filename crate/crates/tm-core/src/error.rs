use thiserror::Error;

/// Errors shared by all solver modules.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive quadrature ran out of subdivision budget. The best
    /// estimate and its error bound are attached so callers can decide
    /// whether the result is still usable.
    #[error("quadrature did not converge: value {value:e}, err_est {err_est:e} after {panels} panels")]
    QuadratureNonConvergence {
        value: f64,
        err_est: f64,
        panels: usize,
    },

    #[error("no sign change in bracket [{lo:e}, {hi:e}] (f: {f_lo:e}, {f_hi:e})")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("multiple roots detected while scanning: {brackets:?}")]
    MultipleRoots { brackets: Vec<(f64, f64)> },

    #[error("Newton iteration diverged after {iters} iterations, residuals {residuals:?}")]
    NewtonDiverged { residuals: Vec<f64>, iters: usize },

    #[error("rank-deficient least squares for powers {powers:?}")]
    RankDeficient { powers: Vec<i32> },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("interval contains fewer than 3 grid points")]
    EmptyInterval,

    #[error("profile has zero mass")]
    ZeroMass,

    #[error("expression evaluation failed at s = {s}: {msg}")]
    Eval { s: f64, msg: String },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
