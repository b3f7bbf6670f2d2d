//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A latent value fell outside the scale range `[s_0, s_{n-1}]`.
    #[error("value {value} outside scale range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    /// A boundary index addressed a sequence element that does not exist.
    #[error("boundary index {index} out of range for {len} sequence elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Training produced a non-finite loss.
    #[error("training failed at epoch {epoch}: {reason}")]
    TrainingFailure { epoch: usize, reason: String },

    /// AUC is undefined when only one class is present.
    #[error("AUC undefined: {0}")]
    UndefinedAuc(String),

    /// Not enough data to satisfy a structural requirement (e.g. an empty
    /// anchor pool for an interior boundary).
    #[error("insufficient data: {0}")]
    DataInsufficiency(String),

    /// Budget allocation with every AUC equal to 1 has no mass to distribute.
    #[error("budget allocation denominator is zero: every AUC equals 1")]
    ZeroDenominator,

    /// Degenerate design matrix in a least-squares fit.
    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("invalid config: {0}")]
    Config(String),

    /// A pipeline stage failed; the stage name identifies where.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(stage: &str, source: Error) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(source),
        }
    }
}
