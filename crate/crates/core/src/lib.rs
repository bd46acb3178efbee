//! Hourly global horizontal irradiance (GHI) forecasting at the h+1 horizon.
//!
//! The pipeline mirrors the classical ground-station workflow:
//!
//! 1. [`ingest`] loads hourly station CSV data, repairs gaps from hourly
//!    climatology, keeps the nine daytime hours (8:00-16:00 true solar time)
//!    and splits the record chronologically.
//! 2. [`solar`] provides solar position, extraterrestrial radiation and the
//!    simplified Solis clear-sky model, fitted per station from the clear-day
//!    envelope.
//! 3. [`stationarize`] turns radiation into a dimensionless index (clearness
//!    index, clear-sky index, or clear-sky index with periodic coefficients)
//!    and inverts the transform exactly after forecasting.
//! 4. [`stats`], [`arma`] and [`mlp`] identify lag structure and fit the two
//!    base predictors: Yule-Walker AR/ARMA and a tanh-hidden-layer perceptron
//!    trained with Levenberg-Marquardt and validation early stopping.
//! 5. [`hybrid`] switches between the branches per hour (by calendar season
//!    or by the previous hour's residual magnitudes).
//! 6. [`eval`] scores everything: nRMSE, coefficient of variation, baseline
//!    models, seasonal point ranking, reliability index and per-hour
//!    confidence intervals.
//!
//! [`synth`] generates deterministic synthetic station data so the whole
//! pipeline can be exercised without access to measured archives.

pub mod arma;
pub mod eval;
pub mod hybrid;
pub mod ingest;
pub(crate) mod linalg;
pub mod mlp;
pub mod solar;
pub mod stationarize;
pub mod stats;
pub mod synth;

pub use ingest::{HourlySeries, SplitSpec};
pub use stationarize::{Method, StationarizedSeries};
pub use solar::{SolarInstant, SolisParams, StationMeta};


/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the forecasting pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // --- ingest ---
    #[error("missing mandatory column '{name}'")]
    MissingColumn { name: String },
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("row {row}: duplicate timestamp {timestamp}")]
    DuplicateTimestamp { row: usize, timestamp: String },
    #[error("no data at all for hour-of-day slot {hour}, cannot repair")]
    EmptyHourSlot { hour: u32 },
    #[error("day {date} has {count} samples in the daytime window, expected 9")]
    IncompleteDay { date: String, count: usize },
    #[error("invalid split: {message}")]
    BadSplit { message: String },

    // --- solar geometry ---
    #[error("non-daytime sample at {timestamp} (sun below horizon)")]
    NonDaytime { timestamp: String },
    #[error("degenerate clear-day envelope: {message}")]
    DegenerateEnvelope { message: String },
    #[error("invalid station metadata: {message}")]
    InvalidStation { message: String },

    // --- stationarization ---
    #[error("non-positive denominator at sample {index}")]
    NonPositiveDenominator { index: usize },
    #[error("moving average is zero at sample {index}")]
    ZeroMovingAverage { index: usize },
    #[error("periodic coefficient at slot {slot} is not positive")]
    NonPositiveCoefficient { slot: usize },
    #[error("slot misalignment: {message}")]
    SlotMisalignment { message: String },
    #[error("leap day sample at {timestamp}; strip leap days before slot indexing")]
    LeapDay { timestamp: String },

    // --- statistics ---
    #[error("zero variance: series is constant")]
    ZeroVariance,
    #[error("singular recursion at lag {lag}")]
    SingularRecursion { lag: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no significant lags under the current bound")]
    NoSignificantLags,

    // --- models ---
    #[error("singular Toeplitz system in Yule-Walker fit")]
    SingularSystem,
    #[error("fitted AR polynomial is not stationary")]
    NonStationary,
    #[error("insufficient history: need {need}, have {have}")]
    InsufficientHistory { need: usize, have: usize },
    #[error("insufficient data: {message}")]
    InsufficientData { message: String },
    #[error("input arity mismatch: model expects {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("input column {index} is constant, cannot normalize")]
    ConstantColumn { index: usize },
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },
    #[error("invalid architecture: {message}")]
    BadArchitecture { message: String },
    #[error("unstable AR parameter: |phi| must be < 1, got {phi}")]
    UnstableAr { phi: f64 },

    // --- hybrid ---
    #[error("seasonal training subset is empty: {seasons}")]
    EmptySeasonSubset { seasons: String },
    #[error("selection log is empty")]
    EmptyLog,

    // --- evaluation ---
    #[error("all measurements are zero, nRMSE undefined")]
    AllZeroMeasurements,
    #[error("zero mean, coefficient of variation undefined")]
    ZeroMean,
    #[error("no prior sample available for persistence forecast")]
    ColdStart,
    #[error("no climatology for slot {slot}")]
    MissingClimatologySlot { slot: usize },

    // --- serialization / io ---
    #[error("unsupported schema version {got}, expected {expected}")]
    SchemaVersion { expected: u32, got: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
