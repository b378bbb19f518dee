use resample::{Error, Infeasibility};
use serde_json::{json, Value};
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    /// Parse failures carry serde's line and column.
    #[error("config {path}: {source}")]
    Config { path: String, source: serde_json::Error },

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// 0 success, 1 input error, 2 infeasible, 3 internal consistency failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Infeasible(_)) => 2,
            CliError::Core(Error::Consistency(_)) => 3,
            _ => 1,
        }
    }

    /// Machine-readable certificate for an infeasible level.
    pub fn certificate(&self) -> Option<Value> {
        let CliError::Core(Error::Infeasible(inf)) = self else { return None };
        Some(match inf {
            Infeasibility::ControlRiccati(why) => json!({ "kind": "control_riccati", "reason": why }),
            Infeasibility::FilterRiccati(why) => json!({ "kind": "filter_riccati", "reason": why }),
            Infeasibility::Coupling { rho, bound } => json!({ "kind": "coupling", "rho_yx": rho, "bound": bound }),
            Infeasibility::BelowOptimum { gamma, gamma_opt } => {
                json!({ "kind": "below_optimum", "gamma": gamma, "gamma_opt": gamma_opt })
            }
        })
    }
}

pub fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}
