use thiserror::Error;

use crate::ode::OdeError;
use crate::units::UnitError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible design: {0}")]
    Infeasible(String),
    #[error("well collapse: the ions are no longer held in separate wells ({0})")]
    WellCollapse(String),
    #[error("unphysical trajectory at t = {t:.6} us: {reason}")]
    Unphysical { t: f64, reason: String },
    #[error("equilibrium not found: {0}")]
    Equilibrium(String),
    #[error("ion order violated at t = {t:.6} us (x1 = {x1}, x2 = {x2})")]
    IonOrder { t: f64, x1: f64, x2: f64 },
    #[error("fit failed: {0}")]
    Fit(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Infeasible(_)
            | Error::WellCollapse(_)
            | Error::Unphysical { .. } => 1,
            Error::Unit(_) | Error::Config(_) => 2,
            Error::Equilibrium(_) | Error::IonOrder { .. } | Error::Fit(_) | Error::Ode(_) => 3,
            Error::Io(_) | Error::Json(_) => 2,
        }
    }

    /// True for errors that the optimizer should treat as a penalty region.
    pub fn is_unphysical(&self) -> bool {
        matches!(
            self,
            Error::Unphysical { .. } | Error::WellCollapse(_) | Error::IonOrder { .. }
        )
    }
}
