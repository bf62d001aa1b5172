use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("structure: {0}")]
    Structure(String),

    #[error("validation: {0}")]
    Validation(String),

    /// Carboxylation conductance is non-positive at this temperature.
    #[error("crop model undefined at {temperature} °C (carboxylation conductance {conductance:e} <= 0)")]
    Domain { temperature: f64, conductance: f64 },

    #[error("no admissible control for day {day}, cell {cell}")]
    NoAdmissibleControl { day: usize, cell: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Input-side errors (bad files, bad config) as opposed to failures while solving.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Structure(_)
                | Error::Validation(_)
                | Error::Dimension(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
