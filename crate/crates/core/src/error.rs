use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("membership {value} at row {row}, column {column} is outside [0, 1]")]
    OutOfRange { row: usize, column: usize, value: f64 },

    #[error("row {row}{} sums to {sum}, expected 1 for a closed-world matrix", sample_label(.sample))]
    RowSumViolation {
        row: usize,
        sample: Option<String>,
        sum: f64,
    },

    #[error("membership {value} at row {row}, column {column} is not finite")]
    NonFinite { row: usize, column: usize, value: f64 },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("class names differ: {left:?} vs {right:?}")]
    ClassNameMismatch { left: Vec<String>, right: Vec<String> },

    #[error("unknown class {0}")]
    UnknownClass(String),

    #[error("membership {0} outside [0, 1]")]
    Domain(f64),

    #[error("columns have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("cannot pool confusion matrices built with different operators ({0} vs {1})")]
    MixedOperator(String, String),

    #[error("confusion matrices do not stem from the same data: {0}")]
    MixedProvenance(String),

    #[error("cannot average results of different measures: {0}")]
    MixedMeasure(String),

    #[error("tie between classes {classes:?} in row {row}")]
    Tie { row: usize, classes: Vec<usize> },

    #[error("mean absolute error {mae} exceeds the attainable maximum {max}")]
    InfeasibleMae { mae: f64, max: f64 },

    #[error("reference column for class {class} holds {count} soft rows; threshold curves need crisp references")]
    SoftReference { class: String, count: usize },

    #[error("need at least {needed} groups, got {got}")]
    TooFewGroups { needed: usize, got: usize },

    #[error("enumeration over {units} units exceeds the limit of {limit}")]
    TooLarge { units: usize, limit: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: u64, column: String, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("group {group}: {source}")]
    InGroup {
        group: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

fn sample_label(sample: &Option<String>) -> String {
    match sample {
        Some(id) => format!(" (sample {id})"),
        None => String::new(),
    }
}

impl Error {
    /// Input and schema problems, as opposed to failures while computing.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::OutOfRange { .. }
            | Error::RowSumViolation { .. }
            | Error::NonFinite { .. }
            | Error::Shape(_)
            | Error::ShapeMismatch { .. }
            | Error::ClassNameMismatch { .. }
            | Error::UnknownClass(_)
            | Error::Parse { .. }
            | Error::Schema(_)
            | Error::Config(_)
            | Error::Io(_) => true,
            Error::InGroup { source, .. } => source.is_input_error(),
            _ => false,
        }
    }

    pub(crate) fn in_group(self, group: &str) -> Error {
        Error::InGroup {
            group: group.to_string(),
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
