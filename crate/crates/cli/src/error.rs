use std::io;
use std::path::{Path, PathBuf};

use polarity_core::corpus::CorpusError;
use polarity_core::embedding::EmbeddingError;
use polarity_core::ensemble::EnsembleError;
use polarity_core::evaluation::EvalError;
use polarity_core::linear::LinearError;
use polarity_core::BundleError;
use thiserror::Error;

/// Usage and configuration problems, including unreadable or malformed input.
pub const EXIT_CONFIG: u8 = 2;
/// Model, bundle and embedding problems.
pub const EXIT_DATA: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Corpus { path: PathBuf, source: CorpusError },
    #[error("{}: {source}", path.display())]
    Bundle { path: PathBuf, source: BundleError },
    #[error("{}: {source}", path.display())]
    Embedding { path: PathBuf, source: EmbeddingError },
    #[error("embedding digest mismatch: model expects {expected}, {} has {found}", path.display())]
    DigestMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{0}")]
    Model(#[from] EnsembleError),
    #[error("{0}")]
    Eval(#[from] EvalError),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn corpus(path: &Path, source: CorpusError) -> Self {
        match source {
            CorpusError::Io(e) => Self::io(path, e),
            source => Self::Corpus {
                path: path.to_path_buf(),
                source,
            },
        }
    }

    pub fn bundle(path: &Path, source: BundleError) -> Self {
        match source {
            BundleError::Io(e) => Self::io(path, e),
            source => Self::Bundle {
                path: path.to_path_buf(),
                source,
            },
        }
    }

    pub fn embedding(path: &Path, source: EmbeddingError) -> Self {
        match source {
            EmbeddingError::Io(e) if e.kind() == io::ErrorKind::NotFound => Self::io(path, e),
            source => Self::Embedding {
                path: path.to_path_buf(),
                source,
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io { .. } | Self::Corpus { .. } => EXIT_CONFIG,
            Self::Model(EnsembleError::InvalidConfig(_))
            | Self::Model(EnsembleError::Linear(LinearError::InvalidConfig(_))) => EXIT_CONFIG,
            Self::Bundle { .. } | Self::Embedding { .. } | Self::DigestMismatch { .. } | Self::Model(_) | Self::Eval(_) => {
                EXIT_DATA
            }
        }
    }
}
