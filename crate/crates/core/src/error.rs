use thiserror::Error;

/// Errors produced by mesh construction, assembly, solving and recovery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("triangle {index} has non-positive signed area {area:e} (vertices {vertices:?})")]
    DegenerateTriangle {
        index: usize,
        area: f64,
        vertices: [usize; 3],
    },

    #[error("malformed mesh: {0}")]
    MalformedMesh(String),

    #[error(
        "linear solve failed for k = {k}, N = {n:?}, mu = {mu}: {reason} \
         (relative residual {residual:e}; the wave number may be near a discrete resonance)"
    )]
    HelmholtzSolve {
        k: f64,
        n: Option<usize>,
        mu: f64,
        residual: f64,
        reason: String,
    },

    #[error("singular system: {reason} (relative residual history {history:?})")]
    SingularSystem { reason: String, history: Vec<f64> },

    #[error("gradient recovery failed at node {node}: {reason}")]
    Recovery { node: usize, reason: String },

    #[error("meshes are not nested: {0}")]
    NotNested(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
