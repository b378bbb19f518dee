use thiserror::Error;

/// Errors raised by the numerical kernels, the synthesis routines and the simulator.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("matrix is not symmetric (asymmetry {asym:.3e})")]
    NotSymmetric { asym: f64 },

    #[error("no stabilizing solution: {0}")]
    NoStabilizingSolution(String),

    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:.3e})")]
    NotHurwitz { abscissa: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("system has nonzero feedthrough, its H2 norm is infinite")]
    InfiniteNorm,

    #[error("algebraic loop: {0}")]
    AlgebraicLoop(String),

    #[error("K0 does not stabilize the plant (closed-loop abscissa {abscissa:.3e})")]
    NotStabilizing { abscissa: f64 },

    #[error("infeasible: {0}")]
    Infeasible(Infeasibility),

    #[error("strict causality violated: probe ratio {ratio:.3e}")]
    NotStrictlyCausal { ratio: f64 },

    #[error("sampling pattern: {0}")]
    Pattern(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),
}

/// Certificate explaining why a requested performance level cannot be met.
#[derive(Debug, Clone, PartialEq)]
pub enum Infeasibility {
    /// The control Riccati equation has no stabilizing solution, or it is not positive semidefinite.
    ControlRiccati(String),
    /// The filter Riccati equation has no stabilizing solution, or it is not positive semidefinite.
    FilterRiccati(String),
    /// Both solutions exist but the coupling condition fails.
    Coupling { rho: f64, bound: f64 },
    /// The level is at or below the optimum (loop-shaping form reports the optimum directly).
    BelowOptimum { gamma: f64, gamma_opt: f64 },
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasibility::ControlRiccati(s) => write!(f, "control Riccati equation: {s}"),
            Infeasibility::FilterRiccati(s) => write!(f, "filter Riccati equation: {s}"),
            Infeasibility::Coupling { rho, bound } => {
                write!(f, "coupling condition rho(YX) = {rho:.6} >= {bound:.6}")
            }
            Infeasibility::BelowOptimum { gamma, gamma_opt } => {
                write!(f, "gamma = {gamma:.6} does not exceed gamma_opt = {gamma_opt:.6}")
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
