use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lie vector norm {norm} exceeds chart radius {limit}")]
    VectorTooLarge { norm: f64, limit: f64 },
    #[error("element has no logarithm inside the chart (norm {norm})")]
    OutsideChart { norm: f64 },
    #[error("element is singular (character gap {gap:e})")]
    SingularElement { gap: f64 },
    #[error("group tags do not match")]
    TagMismatch,
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero subspace where a nonzero one is required")]
    ZeroSubspace,
    #[error("subspaces coincide (distance {distance:e})")]
    EqualSubspaces { distance: f64 },
    #[error("separation hypothesis fails at vector {index}")]
    SeparationViolated { index: usize },
    #[error("subspaces are not transverse (distance {distance:e})")]
    NotTransverse { distance: f64 },

    #[error("map domain radius {radius} is smaller than audit radius {rho}")]
    DomainTooSmall { radius: f64, rho: f64 },
    #[error("newton iteration diverged (residual {residual:e})")]
    NewtonDivergence { residual: f64 },
    #[error("complexity audit failed at rho = {rho}")]
    AuditFailed { rho: f64 },
    #[error("base point is off both chunks (distance {distance:e})")]
    BasePointOff { distance: f64 },

    #[error("product leaves the extended chart (norm {norm})")]
    ChartOverflow { norm: f64 },

    #[error("set is not {rho}-away from subgroups (score {score})")]
    NotAway { score: f64, rho: f64 },

    #[error("bad generator: {0}")]
    BadGenerator(String),
    #[error("combinatorial budget of {budget} exceeded")]
    CombinatorialBudgetExceeded { budget: usize },
    #[error("witness references element {index} but only {available} exist")]
    WitnessStale { index: usize, available: usize },
    #[error("escape pivot failed (score {score:e})")]
    PivotFailure { score: f64 },
    #[error("frame is degenerate (separation {separation:e})")]
    FrameDegenerate { separation: f64 },
    #[error("scale ladder leaves the chart (top scale {top})")]
    ScaleUnderflow { top: f64 },
    #[error("no regular element found (best gap {score:e})")]
    NoRegularElement { score: f64 },

    #[error("config: {0}")]
    Config(String),
    #[error("net file: {0}")]
    Parse(String),
    #[error("io: {0}")]
    Io(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
