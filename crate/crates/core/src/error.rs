use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV at row {row}: {message}")]
    CsvRow { row: u64, message: String },

    #[error("unexpected CSV header {found:?}; expected columns {expected:?}")]
    CsvHeader {
        found: Vec<String>,
        expected: Vec<&'static str>,
    },

    #[error("{path}:{line}: {message}")]
    Lexicon {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid pipeline: {0}")]
    Pipeline(String),

    #[error("unknown pipeline {id:?}; registered pipelines: {}", known.join(", "))]
    UnknownPipeline { id: String, known: Vec<String> },

    #[error("transform {transform} requires {resource}, which the context does not provide")]
    MissingResource {
        transform: String,
        resource: &'static str,
    },

    #[error("pipeline stage {index} ({name}): {source}")]
    Stage {
        index: usize,
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("empty vocabulary after filtering (min_df = {min_df})")]
    EmptyVocabulary { min_df: usize },

    #[error("labels contain a single class; both classes are required")]
    SingleClass,

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
