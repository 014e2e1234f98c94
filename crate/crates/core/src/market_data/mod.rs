//! Market data: loading, validation, lagging, windowing, synthesis, and the
//! logistic shortage/surplus state predictor.

mod io;
mod lag;
mod observe;
mod predictor;
mod synth;
mod table;

use chrono::{DateTime, Utc};
use thiserror::Error;

pub use io::{load_market_table, save_market_table};
pub use lag::{build_lagged_features, lagged_name, LagSpec};
pub use observe::{assemble_observation, MarketLevel, ObservationSpec, Standardizer};
pub use predictor::{
    extract_labeled_rows, fit_state_predictor, logistic_gradient, logistic_loss,
    predict_state_prob, FitConfig, StatePredictor,
};
pub use synth::{generate_synthetic_market, PriceRegime, SynthConfig};
pub use table::{columns, MarketRecord, MarketTable, RegulationState, Resolution};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("table has no rows")]
    EmptyTable,
    #[error("missing column `{column}`")]
    MissingColumn { column: String },
    #[error("column `{column}` has {actual} rows, expected {expected}")]
    ColumnLengthMismatch { column: String, expected: usize, actual: usize },
    #[error("gap in timestamps: expected {expected}, found {actual}")]
    GapInTimestamps { expected: DateTime<Utc>, actual: DateTime<Utc> },
    #[error("non-finite value at row {row}, column `{column}`")]
    NonFiniteValue { row: usize, column: String },
    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("bid clearing {bid} exceeds ask clearing {ask} at row {row}")]
    InvalidSpread { row: usize, bid: f64, ask: f64 },
    #[error("column name `{column}` is reserved")]
    ReservedColumnName { column: String },
    #[error("duplicate column `{column}`")]
    DuplicateColumn { column: String },
    #[error("table is already quarter-hourly")]
    AlreadyQuarterHourly,
    #[error("cannot parse `{value}` in column `{column}` at line {line}: {reason}")]
    ParseError { line: usize, column: String, value: String, reason: String },
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("lag {lag} exceeds table history of {rows} rows")]
    LagExceedsHistory { lag: usize, rows: usize },
    #[error("duplicate lag entry ({name}, {lag})")]
    DuplicateLagEntry { name: String, lag: usize },
    #[error("insufficient history: need {needed} rows before {at}, have {available}")]
    InsufficientHistory { at: DateTime<Utc>, needed: usize, available: usize },
    #[error("timestamp {at} not covered by table")]
    TimestampNotCovered { at: DateTime<Utc> },
    #[error("observation level step is finer than the table resolution")]
    LevelFinerThanTable,
    #[error("invalid synthetic-market config: {reason}")]
    InvalidConfig { reason: String },
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("feature `{column}` is constant; cannot standardize")]
    DegenerateFeature { column: String },
    #[error("non-finite feature `{column}` during fit")]
    NonFiniteFeature { column: String },
    #[error("feature vector has {actual} entries, predictor expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("malformed predictor file: {reason}")]
    MalformedPredictorFile { reason: String },
}
