use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // --- declarative input ---
    #[error("coefficient vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid product specification: {0}")]
    InvalidSpec(String),

    #[error("circle {0} does not exist in this product")]
    InvalidCircle(String),

    // --- duality engine ---
    #[error("B-field component B[{i}][{j}] is not constant on the grid (spread {spread:e})")]
    NotConstant { i: usize, j: usize, spread: f64 },

    #[error("degenerate fiber along coordinate {coord}: |G_tt| = {value:e}")]
    DegenerateFiber { coord: usize, value: f64 },

    #[error("background field {component} depends on fiber coordinate {coord}")]
    FiberDependence { component: String, coord: usize },

    #[error("metric is not positive definite at sample {sample}")]
    NotPositiveDefinite { sample: usize },

    #[error("pairwise subtorus obstruction for circles ({i}, {j}) is {value:e}")]
    ObstructionNonzero { i: usize, j: usize, value: f64 },

    #[error("circle {0} has zero coupling and no flux class on N; no case applies")]
    Unclassified(usize),

    #[error("operation requires an empty parallel stratum on N")]
    ParallelStratumNonEmpty,

    // --- numeric lab ---
    #[error("point lies within {margin:e} of the chart boundary along axis {axis}")]
    BoundaryTooClose { axis: usize, margin: f64 },

    #[error("Richardson check failed: step {step:e} and {coarse:e} disagree by {diff:e}")]
    StepTooLarge { step: f64, coarse: f64, diff: f64 },

    #[error("off-diagonal rank {rank} falls short of r# = {r_sharp}, confirmed by the commutator oracle")]
    LowerBoundViolated { r_sharp: u8, rank: usize },

    // --- orchestration ---
    #[error("config invalid at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },

    #[error("example {id} disagrees with expected verdicts:\n{diff}")]
    ExampleAssertionFailed { id: String, diff: String },

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit status: 2 for config problems, 3 for failed example
    /// assertions, 4 for every numeric or engine failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Scenario { source, .. } => source.exit_code(),
            Error::ConfigInvalid { .. }
            | Error::LengthMismatch { .. }
            | Error::InvalidSpec(_)
            | Error::InvalidCircle(_)
            | Error::Io(_) => 2,
            Error::ExampleAssertionFailed { .. } => 3,
            _ => 4,
        }
    }
}
