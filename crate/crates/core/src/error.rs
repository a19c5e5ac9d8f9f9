use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed PGM header: unexpected token `{token}` ({reason})")]
    Format { token: String, reason: &'static str },

    #[error("unsupported PGM depth: maxval {0}, only 255 is supported")]
    UnsupportedDepth(u32),

    #[error("invalid dimensions {width}x{height}: {reason}")]
    Dimension {
        width: usize,
        height: usize,
        reason: &'static str,
    },

    #[error("region {region:?} exceeds {width}x{height} frame")]
    Bounds {
        region: [i64; 4],
        width: usize,
        height: usize,
    },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("bad model magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported model format version {0}")]
    BadVersion(u32),

    #[error("model data truncated: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("out-of-order frame: index {got} does not follow {previous}")]
    Sequencing { previous: u64, got: u64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach the file in which `self` occurred.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
