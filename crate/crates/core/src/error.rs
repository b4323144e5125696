use std::path::PathBuf;

/// Top-level error type for the toolchain.
///
/// Per-page problems (parse failures, missing files) are deliberately NOT
/// errors: they degrade to warnings recorded in the report so one bad page
/// cannot sink an app, and one bad app cannot sink a corpus run.
#[derive(Debug, thiserror::Error)]
pub enum SpoError {
    #[error("taxonomy load error: {0}")]
    TaxonomyLoad(String),

    #[error("package load error in {dir}: {message}")]
    PackageLoad { dir: PathBuf, message: String },

    #[error("script parse error in {file}: {message}")]
    ScriptParse { file: String, message: String },

    #[error("no valid policy")]
    NoValidPolicy,

    #[error("usage error: {0}")]
    Usage(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SpoError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SpoError::Io {
            path: path.into(),
            source,
        }
    }
}
