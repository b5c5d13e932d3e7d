use std::io;

use thiserror::Error;

/// Error classes surfaced by every stage of the pipeline.
///
/// Each class maps to a distinct process exit code so that scripts can tell
/// a malformed file from a bad parameter without parsing stderr.
#[derive(Debug, Error)]
pub enum NapError {
    #[error("format error: {0}")]
    Format(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("parameter error: {0}")]
    Param(String),
    #[error("io error: {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

pub type Result<T, E = NapError> = std::result::Result<T, E>;

impl NapError {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        NapError::Io {
            context: context.into(),
            source,
        }
    }

    /// Name of the error class, as printed by the CLI.
    pub fn class(&self) -> &'static str {
        match self {
            NapError::Format(_) => "FormatError",
            NapError::Data(_) => "DataError",
            NapError::Shape(_) => "ShapeError",
            NapError::Lookup(_) => "LookupError",
            NapError::Param(_) => "ParamError",
            NapError::Io { .. } => "IoError",
        }
    }

    /// The message without the class prefix.
    pub fn detail(&self) -> String {
        match self {
            NapError::Format(m)
            | NapError::Data(m)
            | NapError::Shape(m)
            | NapError::Lookup(m)
            | NapError::Param(m) => m.clone(),
            NapError::Io { context, source } => format!("{context}: {source}"),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            NapError::Format(_) => 3,
            NapError::Data(_) => 4,
            NapError::Shape(_) => 5,
            NapError::Lookup(_) => 6,
            NapError::Param(_) => 7,
            NapError::Io { .. } => 8,
        }
    }
}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::NapError::$kind(format!($($arg)*)))
    };
}
pub(crate) use bail;
