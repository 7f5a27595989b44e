//! Error type of the command-line tool and its exit codes.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Data { path: PathBuf, source: sgtv::Error },

    #[error("data: {0}")]
    Input(sgtv::Error),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(path: &Path, source: sgtv::Error) -> Self {
        match source {
            sgtv::Error::NonFinite(m) => CliError::Numerical(m),
            source => CliError::Data {
                path: path.to_path_buf(),
                source,
            },
        }
    }

    /// 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data { .. } | CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<sgtv::Error> for CliError {
    fn from(e: sgtv::Error) -> Self {
        use sgtv::Error as E;
        match e {
            E::NonFinite(m) => CliError::Numerical(m),
            E::InvalidArgument(m) => CliError::Usage(m),
            E::MissingSideInfo(_) => CliError::Usage(e.to_string()),
            other => CliError::Input(other),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(sgtv::Error::Io(e.into()))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        assert_eq!(CliError::usage("x").exit_code(), 1);
        assert_eq!(CliError::from(sgtv::Error::NonFinite("v".into())).exit_code(), 3);
        assert_eq!(
            CliError::from(sgtv::Error::Format { what: "image", reason: "bad".into() }).exit_code(),
            2
        );
        assert_eq!(CliError::data(Path::new("a"), sgtv::Error::NonFinite("v".into())).exit_code(), 3);
        assert_eq!(CliError::from(sgtv::Error::MissingSideInfo(sgtv::PriorKind::Dtv)).exit_code(), 1);
    }
}
