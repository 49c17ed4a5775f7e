use thiserror::Error;

pub type Result<T> = std::result::Result<T, HbemError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HbemError {
    #[error("singular point in {kernel}: source and target coincide")]
    SingularPoint { kernel: &'static str },

    #[error("unsupported dimension {0}: kernels need d >= 3, scenes need d = 3")]
    UnsupportedDimension(usize),

    #[error("icosphere subdivision {0} exceeds the maximum of 7")]
    SubdivisionBound(u32),

    #[error("{0}")]
    InvalidInput(String),

    #[error("OFF parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-triangle face at line {line}")]
    NonTriangleFace { line: usize },

    #[error("open surface: closure residual {residual:e} exceeds tolerance")]
    OpenSurface { residual: f64 },

    #[error("zero-area panel {index}")]
    ZeroAreaPanel { index: usize },

    #[error("inconsistent panel orientation at edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),

    #[error("depth violation: {0}")]
    DepthViolation(String),

    #[error("operator {kind} needs a mesh strictly below the plane x_d = 0")]
    ImageAbovePlane { kind: &'static str },

    #[error("unsupported operator kind {0} for this operation")]
    UnsupportedKind(&'static str),

    #[error("operator/field built on mesh {found}, expected {expected}")]
    MeshMismatch { expected: String, found: String },

    #[error("singular system: zero pivot in column {column}")]
    SingularMatrix { column: usize },

    #[error("Neumann series did not converge in {terms} terms (last term norm {last_norm:e}); spectral radius is likely >= 1")]
    SeriesDiverged { terms: usize, last_norm: f64 },

    #[error("evaluation point is {distance:e} from panel {panel}, inside its exclusion radius {limit:e}")]
    TooClose { panel: usize, distance: f64, limit: f64 },

    #[error("point is not on the plane x_d = 0 (x_d = {0:e})")]
    OffPlane(f64),

    #[error("QR iteration failed to converge; {found} of {total} eigenvalues found")]
    QrNoConvergence {
        found: usize,
        total: usize,
        partial: Vec<(f64, f64)>,
    },

    #[error("unknown solver strategy '{0}'")]
    UnknownSolver(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HbemError {
    fn from(e: std::io::Error) -> Self {
        HbemError::Io(e.to_string())
    }
}
