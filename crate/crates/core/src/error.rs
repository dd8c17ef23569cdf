use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid neuron parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("invalid time step dt = {0} ms (must be finite and > 0)")]
    InvalidTimeStep(f64),

    #[error("negative Poisson rate: {0} Hz")]
    NegativeRate(f64),

    #[error("population `{0}` already exists")]
    DuplicatePopulation(String),

    #[error("population `{0}` must contain at least one neuron")]
    EmptyPopulation(String),

    #[error("unknown population `{0}`")]
    UnknownPopulation(String),

    #[error("neuron index {index} out of range for population `{population}` (size {size})")]
    NeuronOutOfRange {
        population: String,
        index: usize,
        size: usize,
    },

    #[error("invalid connection rule: {0}")]
    InvalidRule(String),

    #[error("weight {weight} pA is inconsistent with receptor {receptor}")]
    WeightSign { receptor: String, weight: f64 },

    #[error("invalid synaptic delay {delay} ms (must be >= dt = {dt} ms)")]
    InvalidDelay { delay: f64, dt: f64 },

    #[error("duration {duration} ms is not a non-negative multiple of dt = {dt} ms")]
    InvalidDuration { duration: f64, dt: f64 },

    #[error("invalid stimulus window [{t0}, {t1}) ms")]
    InvalidWindow { t0: f64, t1: f64 },

    #[error("stimulus on `{population}` overlaps an existing stimulus window")]
    OverlappingStimulus { population: String },

    #[error("invalid dopamine trace: {0}")]
    InvalidTrace(String),

    #[error("unknown edge override `{0}`")]
    UnknownEdge(String),

    #[error("influence matrix must be 5x3, got {rows}x{cols}")]
    MatrixShape { rows: usize, cols: usize },

    #[error("influence matrix is rank deficient (singular values {singular_values:?})")]
    RankDeficient { singular_values: Vec<f64> },

    #[error("invalid affect table: {0}")]
    InvalidTable(String),

    #[error("invalid monoamine coordinate: {0}")]
    InvalidCoordinate(String),

    #[error("empty analysis window [{t0}, {t1}) ms")]
    EmptyWindow { t0: f64, t1: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_finite(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { what, value })
    }
}
