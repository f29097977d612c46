use alphacast::{AdmError, EvalError, PredictionError, SparseError, StableError, TrafficError};
use thiserror::Error;

/// Failure of a command, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
        }
    }

    /// `error[kind]: message`, always on one line.
    pub fn render(&self) -> String {
        let msg = self.to_string();
        let flat: Vec<&str> = msg.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        format!("error[{}]: {}", self.kind(), flat.join("; "))
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl From<TrafficError> for CliError {
    fn from(e: TrafficError) -> Self {
        match e {
            TrafficError::IndexOutOfRange { .. } => CliError::Usage(e.to_string()),
            TrafficError::DegenerateGeometry(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<StableError> for CliError {
    fn from(e: StableError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<PredictionError> for CliError {
    fn from(e: PredictionError) -> Self {
        match e {
            PredictionError::InvalidSpec(_) | PredictionError::WindowOutOfRange { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SparseError> for CliError {
    fn from(e: SparseError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<AdmError> for CliError {
    fn from(e: AdmError) -> Self {
        match e {
            AdmError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            AdmError::Prediction(p) => p.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Prediction(p) => p.into(),
            EvalError::Adm(a) => a.into(),
            EvalError::ZeroTruth | EvalError::LengthMismatch { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}
