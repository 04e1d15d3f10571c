use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input not found: {}", .0.display())]
    InputNotFound(PathBuf),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("non-positive price {value} for sector {sector} on {date}")]
    NonPositivePrice {
        sector: String,
        date: NaiveDate,
        value: f64,
    },

    #[error("dates not strictly increasing at {0}")]
    NonMonotoneDates(NaiveDate),

    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("empty result for window {from}..={to}")]
    EmptyWindow { from: NaiveDate, to: NaiveDate },

    #[error("invalid bin count q = {0} (need q >= 2)")]
    InvalidBinCount(usize),

    #[error("value {value} outside partition range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("symbol {symbol} outside [1, {q}]")]
    InvalidSymbol { symbol: u16, q: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("series are not aligned on the same dates")]
    MisalignedDates,

    #[error("bin count mismatch: {left} vs {right}")]
    BinCountMismatch { left: usize, right: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("no root reaches every node")]
    NoSpanningRoot,

    #[error("invalid arborescence: {0}")]
    InvalidArborescence(String),

    #[error("exhaustive enumeration limited to {max} nodes, got {got}")]
    TooManyNodes { max: usize, got: usize },

    #[error("insufficient coverage: {0}")]
    InsufficientCoverage(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),
}
