use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "tridiagonal eigensolver did not converge for eigenvalue {index} of a {size}x{size} \
         matrix after {iterations} iterations (diag range [{diag_min:.6e}, {diag_max:.6e}], \
         max |offdiag| {offdiag_max:.6e})"
    )]
    EigenSolver {
        size: usize,
        index: usize,
        iterations: usize,
        diag_min: f64,
        diag_max: f64,
        offdiag_max: f64,
    },

    #[error("found only {found} boundary roots for {mode} in q in (0, {q_max}], wanted root {wanted}")]
    RootNotFound {
        mode: String,
        found: usize,
        wanted: usize,
        q_max: f64,
    },

    #[error("stencil point at xi = {xi:.6} lies beyond xi0 + 0.5 = {limit:.6}")]
    OutsideEvaluationDomain { xi: f64, limit: f64 },

    #[error("simulation produced no in-bounds steps: {0}")]
    Pathological(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
