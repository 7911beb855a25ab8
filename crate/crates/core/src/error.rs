use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter failed validation before any computation ran.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// `λ` is (numerically) in the spectrum of the discretized Hamiltonian.
    #[error("λ is not in the resolvent set: {detail}")]
    SingularResolvent { detail: String },

    /// The solver finished but the relative residual missed the contract.
    #[error("relative residual {residual:e} exceeds {limit:e}")]
    ResidualTooLarge { residual: f64, limit: f64 },

    #[error("dense path needs N = {n} but the cap is {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("decay profile is degenerate at x = {x}: |G| = {value:e}")]
    DegenerateProfile { x: f64, value: f64 },

    /// An iterative method stopped before reaching its tolerance.
    #[error("{method} did not converge after {iterations} iterations")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
