use std::path::PathBuf;

use thiserror::Error;

/// Coarse grouping of errors by pipeline stage, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageFamily {
    Config,
    Io,
    Data,
    Irt,
    Cdi,
    Classifier,
    Cat,
    Gate,
}

impl StageFamily {
    pub fn exit_code(self) -> i32 {
        match self {
            StageFamily::Config => 2,
            StageFamily::Io => 3,
            StageFamily::Data => 4,
            StageFamily::Irt => 5,
            StageFamily::Cdi => 6,
            StageFamily::Classifier => 7,
            StageFamily::Cat => 8,
            StageFamily::Gate => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StageFamily::Config => "config",
            StageFamily::Io => "io",
            StageFamily::Data => "data",
            StageFamily::Irt => "irt",
            StageFamily::Cdi => "cdi",
            StageFamily::Classifier => "classifier",
            StageFamily::Cat => "cat",
            StageFamily::Gate => "gate",
        }
    }
}

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV error in {context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },

    #[error("input has no header row (first row: {first_row:?})")]
    MissingHeader { first_row: Vec<String> },

    #[error("required column `{0}` not found")]
    MissingColumn(String),

    #[error("row {row} has {got} fields, expected {expected}")]
    RowWidth { row: usize, got: usize, expected: usize },

    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },

    #[error("row {row}, column `{column}`: cannot parse {value:?} as a number")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: label {value:?} is not mapped to either class")]
    UnknownLabel { row: usize, value: String },

    #[error("invalid coding spec: {0}")]
    CodingSpec(String),

    #[error("feature `{feature}`, row {row}: value {value:?} has no category rule entry")]
    UncodedValue {
        feature: String,
        row: usize,
        value: String,
    },

    #[error("class {0} has no cases")]
    EmptyClass(&'static str),

    #[error("invalid response matrix: {0}")]
    InvalidResponses(String),

    #[error("item {index} (`{name}`) is degenerate: {reason}")]
    DegenerateItem {
        index: usize,
        name: String,
        reason: String,
    },

    #[error("invalid item parameters: {0}")]
    InvalidItem(String),

    #[error("response vector has {got} entries but the item bank has {expected} items")]
    LengthMismatch { expected: usize, got: usize },

    #[error("item {item}: response code {code} is outside the item's categories")]
    CodeOutOfRange { item: usize, code: u8 },

    #[error("case `{0}` is already oriented")]
    AlreadyOriented(String),

    #[error("case `{0}` has no oriented CDI")]
    NotOriented(String),

    #[error("no records to split")]
    EmptyRecords,

    #[error("classifier: {0}")]
    Classifier(String),

    #[error("every grid cell diverged:\n{0}")]
    AllCellsDiverged(String),

    #[error("feature vector has {got} entries, model expects {expected}")]
    FeatureLength { expected: usize, got: usize },

    #[error("CAT pool is empty")]
    EmptyPool,

    #[error("CAT pool exhausted")]
    PoolExhausted,

    #[error("MLC needs at least {required} administered cases, have {got}")]
    InsufficientCases { required: usize, got: usize },

    #[error("no features for case `{0}`")]
    FeatureLookup(String),

    #[error("invalid certificate: {0}")]
    Certificate(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub fn csv(context: impl Into<String>, source: csv::Error) -> Self {
        Error::Csv {
            context: context.into(),
            source,
        }
    }

    /// Wraps an error with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    pub fn family(&self) -> StageFamily {
        match self {
            Error::Config(_) | Error::Json { .. } => StageFamily::Config,
            Error::Io { .. } | Error::Csv { .. } => StageFamily::Io,
            Error::MissingHeader { .. }
            | Error::MissingColumn(_)
            | Error::MissingValue { .. }
            | Error::RowWidth { .. }
            | Error::ParseCell { .. }
            | Error::UnknownLabel { .. }
            | Error::CodingSpec(_)
            | Error::UncodedValue { .. }
            | Error::EmptyClass(_)
            | Error::EmptyRecords => StageFamily::Data,
            Error::InvalidResponses(_)
            | Error::DegenerateItem { .. }
            | Error::InvalidItem(_) => StageFamily::Irt,
            Error::LengthMismatch { .. }
            | Error::CodeOutOfRange { .. }
            | Error::AlreadyOriented(_)
            | Error::NotOriented(_) => StageFamily::Cdi,
            Error::Classifier(_) | Error::AllCellsDiverged(_) | Error::FeatureLength { .. } => {
                StageFamily::Classifier
            }
            Error::EmptyPool
            | Error::PoolExhausted
            | Error::InsufficientCases { .. }
            | Error::FeatureLookup(_) => StageFamily::Cat,
            Error::Certificate(_) => StageFamily::Gate,
            Error::Stage { source, .. } => source.family(),
        }
    }
}
