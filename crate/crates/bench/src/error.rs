use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] qrobust::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("results table line {line}: {msg}")]
    Table { line: usize, msg: String },
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
