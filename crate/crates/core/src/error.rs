use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The state left the prescribed envelope, `|x| >= rho(t)`.
    #[error("prescribed performance violated at t = {t}: |x| = {x_abs} >= rho = {rho}")]
    Infeasible { t: f64, x_abs: f64, rho: f64 },

    #[error("no sign change in bracket [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("no convergence after {iterations} iterations (last x = {last_x})")]
    Convergence { iterations: usize, last_x: f64 },

    /// A gain margin (eta_0, or the Gaussian floor minus the disturbance) is not positive.
    #[error("infeasible gain: {0}")]
    InfeasibleGain(String),

    #[error("numeric divergence after t = {last_valid_time}")]
    NumericDivergence { last_valid_time: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
