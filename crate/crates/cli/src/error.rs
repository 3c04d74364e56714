use std::path::Path;

/// Failure classes with stable exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<plfam_core::Error> for CliError {
    fn from(e: plfam_core::Error) -> Self {
        use plfam_core::Error as E;
        match e {
            E::InvalidData(_)
            | E::Dimension(_)
            | E::IndexOutOfRange { .. }
            | E::InvalidCandidate(_)
            | E::InvalidFoldCount { .. }
            | E::InvalidWeights(_) => CliError::Data(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<plfam_simbench::BenchError> for CliError {
    fn from(e: plfam_simbench::BenchError) -> Self {
        use plfam_simbench::BenchError as B;
        match e {
            B::Config(m) => CliError::Usage(m),
            B::Core(c) => c.into(),
            B::Replication { .. } => CliError::Numerical(e.to_string()),
            B::Io(io) => CliError::Data(io.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
