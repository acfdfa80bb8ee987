use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HsieError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resolvent matrix is singular (pivot {pivot:e} below tolerance {tolerance:e})")]
    SingularResolvent { pivot: f64, tolerance: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("outer boundary is not convex at vertex {vertex}")]
    NonConvexBoundary { vertex: usize },

    #[error("boundary edges do not form closed loops (vertex {vertex} has degree {degree})")]
    OpenBoundaryLoop { vertex: usize, degree: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate boundary edge {edge}")]
    DegenerateEdge { edge: usize },

    #[error("exterior rays cross: a + b = {sum:e} < 0 on edge {edge}")]
    RayCrossing { edge: usize, sum: f64 },

    #[error("degenerate trapezoid (h_xi = {h_xi:e})")]
    DegenerateTrapezoid { h_xi: f64 },

    #[error("degenerate corner: |det J| = {det:e}")]
    DegenerateCorner { det: f64 },

    #[error("no material value for material id {0}")]
    MissingMaterial(u32),

    #[error("inconsistent rays: {0}")]
    InconsistentRays(String),

    #[error("missing trace data: {0}")]
    MissingTraceData(String),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("relative residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("linear system is singular (relative residual {residual:e}); kappa^2 is likely a discrete eigenvalue")]
    SingularSystem { residual: f64 },

    #[error("eigensolver did not converge after {restarts} restarts ({converged} of {wanted} pairs)")]
    ConvergenceFailure { restarts: usize, converged: usize, wanted: usize },

    #[error("shift is an eigenvalue of the pencil")]
    ShiftIsEigenvalue,

    #[error("no guided mode: {0}")]
    NoGuidedMode(String),

    #[error("mode branch {branch} out of range ({available} guided modes of this parity)")]
    BranchOutOfRange { branch: usize, available: usize },

    #[error("dense eigensolver failed: {0}")]
    DenseEigen(String),
}

impl HsieError {
    /// Stable variant name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::InvalidParameter(_) => "InvalidParameter",
            Self::SingularResolvent { .. } => "SingularResolvent",
            Self::Parse { .. } => "Parse",
            Self::NonConvexBoundary { .. } => "NonConvexBoundary",
            Self::OpenBoundaryLoop { .. } => "OpenBoundaryLoop",
            Self::InvalidMesh(_) => "InvalidMesh",
            Self::DegenerateEdge { .. } => "DegenerateEdge",
            Self::RayCrossing { .. } => "RayCrossing",
            Self::DegenerateTrapezoid { .. } => "DegenerateTrapezoid",
            Self::DegenerateCorner { .. } => "DegenerateCorner",
            Self::MissingMaterial(_) => "MissingMaterial",
            Self::InconsistentRays(_) => "InconsistentRays",
            Self::MissingTraceData(_) => "MissingTraceData",
            Self::SingularMatrix => "SingularMatrix",
            Self::ResidualTooLarge { .. } => "ResidualTooLarge",
            Self::SingularSystem { .. } => "SingularSystem",
            Self::ConvergenceFailure { .. } => "ConvergenceFailure",
            Self::ShiftIsEigenvalue => "ShiftIsEigenvalue",
            Self::NoGuidedMode(_) => "NoGuidedMode",
            Self::BranchOutOfRange { .. } => "BranchOutOfRange",
            Self::DenseEigen(_) => "DenseEigen",
        }
    }
}

pub type Result<T> = std::result::Result<T, HsieError>;
