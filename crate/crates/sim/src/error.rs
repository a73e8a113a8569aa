use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] flightcore::Error),
    /// `line` is 0 for values given on the command line.
    #[error("{}: {reason}", location(*line))]
    Config { line: usize, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Ply(#[from] crate::ply::PlyError),
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl SimError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}

fn location(line: usize) -> String {
    if line == 0 {
        "command line".into()
    } else {
        format!("config line {line}")
    }
}
