use std::path::PathBuf;

use thiserror::Error;

/// Errors reported by every fallible operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: cannot parse '{token}' as a finite number")]
    BadToken {
        path: PathBuf,
        line: usize,
        token: String,
    },

    #[error("{path}:{line}: run of {run} missing values starts here, exceeds max_gap={max_gap}")]
    GapTooLong {
        path: PathBuf,
        line: usize,
        run: usize,
        max_gap: usize,
    },

    #[error("{path}: series contains no observed values")]
    AllMissing { path: PathBuf },

    #[error("{path}: series is empty")]
    EmptySeries { path: PathBuf },

    #[error("series '{id}' contains a non-finite value at index {index}")]
    NonFiniteValue { id: String, index: usize },

    #[error("{path}:{line}: {reason}")]
    BadManifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("duplicate id '{id}'")]
    DuplicateId { id: String },

    #[error("subsequence [{start}, {start}+{length}) out of bounds for series of length {series}")]
    SubsequenceOutOfBounds {
        start: usize,
        length: usize,
        series: usize,
    },

    #[error("query length {query} invalid for series length {series}: need {min} <= query length <= series length")]
    QueryLength {
        query: usize,
        series: usize,
        min: usize,
    },

    #[error("plan was built for query length {expected}, got {got}")]
    PlanQueryLength { expected: usize, got: usize },

    #[error("window length {window} invalid for series length {series}: need 2 <= window <= series/2")]
    WindowLength { window: usize, series: usize },

    #[error("dictionary size must be at least 1")]
    ZeroDictionarySize,

    #[error("delta factor {value} out of range: need 0 < delta_factor < 1")]
    DeltaFactor { value: f64 },

    #[error("pattern length {length} invalid for series length {series}: need 2 <= length <= series")]
    PatternLength { length: usize, series: usize },

    #[error("a manual dictionary needs at least one range")]
    EmptyRanges,

    #[error("pattern must contain at least one value")]
    EmptyPattern,

    #[error("dictionary must contain at least one pattern")]
    EmptyDictionary,

    #[error("{path}: not a valid dictionary file: {reason}")]
    BadDictionaryFile { path: PathBuf, reason: String },

    #[error("need at least {need} items, got {got}")]
    TooFewItems { need: usize, got: usize },

    #[error("{path}:{line}: not a valid distance matrix: {reason}")]
    BadMatrixFile {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("distance matrix rows have inconsistent lengths")]
    RaggedMatrix,

    #[error("distance matrix is asymmetric at ({i}, {j}): {a} vs {b}")]
    AsymmetricMatrix { i: usize, j: usize, a: f64, b: f64 },

    #[error("distance matrix has a negative entry at ({i}, {j}): {value}")]
    NegativeDistance { i: usize, j: usize, value: f64 },

    #[error("got {labels} labels for {items} items")]
    LabelCount { items: usize, labels: usize },

    #[error("pattern of length {pattern} is longer than the scored series (length {series})")]
    PatternLongerThanSeries { pattern: usize, series: usize },

    #[error("smoothing window must be at least 1")]
    ZeroSmoothingWindow,

    #[error("random sampler failed to place {want} non-overlapping patterns (internal bug)")]
    SamplerStalled { want: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
