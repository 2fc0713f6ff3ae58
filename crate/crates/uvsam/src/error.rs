use std::fmt::Display;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors surfaced by the commands and the service.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad manifest, flags or request; raised before any output is touched.
    #[error("{0}")]
    Validation(String),
    /// The reference texel lies outside the occupancy mask.
    #[error("reference texel ({col}, {row}) not on surface")]
    NotOnSurface { col: usize, row: usize },
    #[error("no surface hit")]
    NoSurfaceHit,
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    /// A core module failed; `stage` names the pipeline step.
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("output directory {} is locked by another command", .0.display())]
    Locked(PathBuf),
}

impl Error {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Validation(_) | Error::NotOnSurface { .. } | Error::NoSurfaceHit => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl AsRef<Path>) -> impl FnOnce(io::Error) -> Error {
        let path = path.as_ref().to_path_buf();
        move |source| Error::Io { path, source }
    }

    pub fn stage<E: Display>(stage: &'static str) -> impl FnOnce(E) -> Error {
        move |e| Error::Stage {
            stage,
            message: e.to_string(),
        }
    }

    pub fn format(path: impl AsRef<Path>, message: impl Into<String>) -> Error {
        Error::Format {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
