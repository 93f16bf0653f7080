use thiserror::Error;

/// Errors produced anywhere in the polarization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument or intermediate value falls outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Stokes vector with zero degree of polarization has no sphere direction.
    #[error("undefined direction: degree of polarization is zero")]
    UndefinedDirection,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The input states do not span Stokes space. `deficient` lists the
    /// unit directions (in Stokes space) that the inputs fail to probe.
    #[error(
        "ill-posed retrieval: input states have rank {rank} < 4; unprobed directions {deficient:?}"
    )]
    IllPosed {
        rank: usize,
        deficient: Vec<[f64; 4]>,
    },

    #[error(
        "ambiguous cycle count: k = {first} and k = {second} fit the prior about equally well"
    )]
    AmbiguousCycles { first: u32, second: u32 },

    #[error("non-physical Mueller matrix: {0}")]
    NonPhysical(String),

    /// Diattenuation of one: the matrix contains an ideal polarizer and the
    /// polar factors after it are not recoverable.
    #[error("degenerate diattenuator (|D| = {0}); retarder and depolarizer are undetermined")]
    DegenerateDiattenuator(f64),

    #[error("fiber model {0} has no eigenaxis")]
    NoEigenAxis(&'static str),

    #[error("degenerate calibration: bright state lies on the eigenaxis")]
    DegenerateCalibration,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn at(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with any stage tags removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 2 for file/schema problems, 3 for domain errors,
    /// 4 for ill-posed or ambiguous results.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Schema(_) => 2,
            Error::IllPosed { .. } | Error::AmbiguousCycles { .. } => 4,
            _ => 3,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
