use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{rows} rows in the sample matrix but {targets} target values")]
    ShapeMismatch { rows: usize, targets: usize },
    #[error("{labels} variable labels for {columns} columns")]
    LabelMismatch { labels: usize, columns: usize },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("non-finite target value at row {row}")]
    NonFiniteTarget { row: usize },
    #[error("dataset has no rows")]
    Empty,
    #[error("row index {index} out of range for {len} rows")]
    RowOutOfRange { index: usize, len: usize },
    #[error("column index {index} out of range for {len} columns")]
    ColumnOutOfRange { index: usize, len: usize },
    #[error("duplicate index {index}")]
    DuplicateIndex { index: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(&'static str),
    #[error("row {row} has zero standard deviation")]
    DegenerateRow { row: usize },
    #[error("column {column} has zero variance")]
    DegenerateColumn { column: usize },
    #[error("spectrum normalization needs at least 2 variables, got {0}")]
    TooFewVariables(usize),
    #[error("digamma is undefined for {0}")]
    DigammaDomain(f64),
    #[error("k = {k} must satisfy 1 <= k < N = {n}")]
    InvalidK { k: usize, n: usize },
    #[error("variable subset is empty")]
    EmptySubset,
    #[error("no variables left to add")]
    NoCandidates,
    #[error("protected variable {0} is not in the current subset")]
    ProtectedNotSelected(usize),
    #[error("backward step needs at least 2 selected variables, got {0}")]
    SubsetTooSmall(usize),
    #[error("requested {requested} variables but only {available} are available")]
    CountTooLarge { requested: usize, available: usize },
    #[error("{len} candidates exceed the exhaustive-search limit of {max}; lower P")]
    CandidatePoolTooLarge { len: usize, max: usize },
    #[error("option-2 set has {b} variables, more than P = {p}")]
    PoolSmallerThanB { b: usize, p: usize },
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("input dimension {found} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{predictions} predictions for {targets} targets")]
    LengthMismatch { predictions: usize, targets: usize },
    #[error("linear system is singular (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("requested {requested} components, at most {max} allowed")]
    TooManyComponents { requested: usize, max: usize },
    #[error("cannot split {n} samples into {l} folds")]
    InvalidFolds { n: usize, l: usize },
    #[error("meta-parameter grid is empty")]
    EmptyGrid,
    #[error("every grid point failed; first error: {0}")]
    AllGridPointsFailed(String),
    #[error("the test set has already been read")]
    TestSetReread,
    #[error("method id {0} is not in 1..=13")]
    UnknownMethod(u8),
    #[error("MI scaling must be one of none, target, all")]
    UnknownScaling,
}

impl Error {
    /// Numerical failures, as opposed to malformed inputs or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::AllGridPointsFailed(_))
    }
}
