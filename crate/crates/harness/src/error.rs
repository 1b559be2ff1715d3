use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 config, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io(_) => 4,
        }
    }
}

impl From<cdma_mp::Error> for HarnessError {
    fn from(e: cdma_mp::Error) -> Self {
        use cdma_mp::Error as E;
        match e {
            E::Config(_) | E::Dimension { .. } | E::Capacity { .. } | E::NotAntipodal { .. } => {
                HarnessError::Config(e.to_string())
            }
            E::DegenerateStatistics { .. } | E::DegenerateParameters(_) | E::Domain(_) => {
                HarnessError::Numerical(e.to_string())
            }
        }
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Config(e.to_string())
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
