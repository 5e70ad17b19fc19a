use std::path::PathBuf;

/// Errors raised across the planning pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no primitives")]
    NoPrimitives,

    #[error("primitive {index}: {reason}")]
    InvalidPrimitive { index: usize, reason: String },

    #[error("invalid road: {0}")]
    InvalidRoad(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("degenerate segment {0}")]
    DegenerateSegment(usize),

    #[error("nonpositive speed at waypoint {0}")]
    NonpositiveSpeed(usize),

    #[error("plan needs at least {min} waypoints, got {got}")]
    TooFewWaypoints { min: usize, got: usize },

    #[error("plan shape mismatch: {0}")]
    Shape(String),

    #[error("cutoffs out of order: tau1 = {tau1} must exceed tau2 = {tau2} > 0")]
    CutoffsOutOfOrder { tau1: f64, tau2: f64 },

    #[error("nonpositive time step {0}")]
    NonpositiveTimeStep(f64),

    #[error("infeasible bounds at variable {index}: [{lower}, {upper}]")]
    InfeasibleBounds { index: usize, lower: f64, upper: f64 },

    #[error("invalid planner config: {0}")]
    InvalidConfig(String),

    #[error("telemetry: {0}")]
    Telemetry(String),

    #[error("gap [{start}, {end}] has no valid fix on both sides")]
    GapAtStreamEdge { start: f64, end: f64 },

    #[error("gps and imu streams do not overlap in time")]
    NonOverlappingStreams,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
