use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, mapped onto process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Data,
    Numeric,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Data => 3,
            Category::Numeric => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Data => "data",
            Category::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("trials belong to different subjects ({first} vs {other})")]
    MixedSubjects { first: String, other: String },
    #[error("trials have different sample rates ({first} vs {other})")]
    MixedSampleRates { first: f64, other: f64 },
    #[error("marker [{start}, {end}) out of bounds for recording of length {len}")]
    MarkerOutOfBounds { start: usize, end: usize, len: usize },
    #[error("marker starting at {start} overlaps or leaves a gap after sample {expected}")]
    MarkerOverlap { start: usize, expected: usize },
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error("invalid sampling rate {0}")]
    InvalidSampleRate(f64),

    #[error("length {len} is not divisible by {divisor}")]
    LengthNotDivisible { len: usize, divisor: usize },
    #[error("expected {expected} threshold bands, got {found}")]
    BandCountMismatch { expected: usize, found: usize },
    #[error("decomposition was produced by a different wavelet spec")]
    SpecMismatch,
    #[error("unsupported Fejer-Korovkin order {0}")]
    UnsupportedWaveletOrder(usize),
    #[error("operation requires a {expected} recording")]
    WrongDomain { expected: &'static str },

    #[error("signal has zero variance")]
    ConstantSignal,
    #[error("input of length {len} is too short (need at least {min})")]
    TooShort { len: usize, min: usize },
    #[error("found {found} peaks, need at least {required}")]
    TooFewPeaks { found: usize, required: usize },
    #[error("estimated heart rate {bpm:.1} bpm is outside the plausible range")]
    ImplausibleHeartRate { bpm: f64 },
    #[error("{what} must be positive, got {value}")]
    NonPositiveInput { what: &'static str, value: f64 },

    #[error("baseline mean of {feature} is zero")]
    ZeroBaselineFeature { feature: &'static str },
    #[error("feature {index} has zero variance in the training set")]
    DegenerateFeature { index: usize },

    #[error("training labels contain a single class")]
    SingleClassInput,
    #[error("solver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("leave-one-subject-out needs at least two subjects")]
    SingleSubject,
    #[error("instance {index} has no class label")]
    UnlabeledInstance { index: usize },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("unknown task '{task}'{}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    UnknownTask { task: String, row: Option<usize> },

    #[error("missing file {}", path.display())]
    MissingFile { path: PathBuf },
    #[error("{}:{line}: {message}", path.display())]
    MalformedRow {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{}:{line}: non-finite sample", path.display())]
    NonFiniteValue { path: PathBuf, line: u64 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Stage { source, .. } => source.category(),
            Error::Config(_) | Error::UnsupportedWaveletOrder(_) => Category::Config,
            Error::ConstantSignal
            | Error::DegenerateFeature { .. }
            | Error::NoConvergence { .. }
            | Error::ZeroBaselineFeature { .. }
            | Error::ImplausibleHeartRate { .. }
            | Error::EmptyMatrix => Category::Numeric,
            _ => Category::Data,
        }
    }

    /// Name of the pipeline stage the error was raised in, if attributed.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
