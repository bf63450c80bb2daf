use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("dispersion iteration diverged (m = {order})")]
    DispersionDiverged { order: u32 },
    #[error("degenerate spectrum: total integral is zero")]
    DegenerateSpectrum,
    #[error("degenerate fit: normal matrix is singular")]
    DegenerateFit,
    #[error("peak search found {found} peak(s), model needs {needed}")]
    PeaksNotFound { found: usize, needed: usize },
    #[error("insufficient modes: need at least 3 peak centers, got {0}")]
    InsufficientModes(usize),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// True for input/config problems (as opposed to runtime or fit failures).
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_) | Error::Json(_) | Error::Csv(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    /// Purcell factor came out negative (on-resonance lifetime longer than off).
    NegativePurcell,
    /// Lifetime is at least half the repetition period; decays overlap.
    PileUpRegime,
    /// Transition frequencies were given in descending order and were swapped.
    SwappedTransitions,
    /// Two fitted peaks lie within half a linewidth of each other.
    Unresolved,
}
