use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure categories shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("inadmissible state: curvature vector leaves the cone at {bad_nodes} of {total} nodes")]
    Inadmissible { bad_nodes: usize, total: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("admissibility safeguard: no damped step keeps the iterate admissible (residual {residual:.3e})")]
    Safeguard { residual: f64 },

    /// `trace` holds `(t, newton_iters, residual_norm)` of the accepted steps.
    #[error("continuation stalled at t = {t:.6} with step {step:.3e}")]
    Stall {
        t: f64,
        step: f64,
        trace: Vec<(f64, usize, f64)>,
    },

    #[error("singular Jacobian at pivot {0}")]
    Singular(usize),

    #[error("focal crossing: parallel surface degenerates at s = {s:.6} (node {node})")]
    FocalCrossing { node: usize, s: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
