use thiserror::Error;

/// Errors produced by the ROM pipeline.
#[derive(Debug, Error)]
pub enum RomError {
    /// Explicit time step fails the stability precheck.
    #[error("CFL violation: {0}")]
    CflViolation(String),

    /// NaN or Inf appeared mid-run; the integration blew up.
    #[error("non-finite state at step {step} (t = {time})")]
    NonFiniteState { step: usize, time: f64 },

    #[error("requested rank {requested} exceeds available rank {available}")]
    RankTooLarge { requested: usize, available: usize },

    /// Snapshot matrix is identically zero after centering; no basis exists.
    #[error("degenerate snapshots: centered snapshot matrix is zero")]
    DegenerateSnapshots,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Closure extraction needs the resolved rank strictly below the basis rank.
    #[error("resolved rank {r} must be strictly smaller than basis rank {big_r}")]
    RankNotStrictlySmaller { r: usize, big_r: usize },

    #[error("insufficient samples: {got} provided, at least {needed} required")]
    InsufficientSamples { got: usize, needed: usize },

    #[error("ill-conditioned least-squares system: condition estimate {condition:.3e}")]
    IllConditioned { condition: f64 },

    #[error("time {t} outside covered range [{t_min}, {t_max}]")]
    TimeOutOfRange { t: f64, t_min: f64, t_max: f64 },

    #[error("time axes of compared series are not aligned")]
    MisalignedTimes,

    /// Basis supplied to a constructor is not orthonormal in the weighted inner product.
    #[error("basis not orthonormal: max Gram deviation {deviation:.3e}")]
    BasisNotOrthonormal { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("artifact version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: String, found: String },

    #[error("malformed artifact: {0}")]
    MalformedArtifact(String),

    #[error("I/O failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RomError>;
