use thiserror::Error;

use crate::cone::FlowTrajectory;

/// Errors raised by the curvature lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({0}) out of range for dimension {1}")]
    IndexOutOfRange(String, usize),

    #[error("conflicting redundant component at ({i},{j},{k},{l}): {existing} vs {given}")]
    InconsistentSymmetry {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        existing: f64,
        given: f64,
    },

    #[error("first Bianchi identity violated: residual {residual:.3e} exceeds {tolerance:.3e}")]
    BianchiViolation { residual: f64, tolerance: f64 },

    #[error("matrix is not symmetric: max asymmetry {0:.3e}")]
    NotSymmetric(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("dimension {0} is not supported here (need {1})")]
    BadDimension(usize, &'static str),

    #[error("l_ab transform is singular (condition estimate {condition:.3e})")]
    SingularTransform { condition: f64 },

    #[error("a(b) denominator 2+(n-3)b = {0} is not positive")]
    NonpositiveDenominator(f64),

    #[error("parameter {name} = {value} is out of range")]
    BadParameter { name: &'static str, value: f64 },

    #[error("unknown random tensor class '{0}'")]
    BadClass(String),

    #[error("frame rows are not orthonormal (deviation {0:.3e})")]
    NonOrthonormalFrame(f64),

    #[error("tensor is not strictly PIC (PIC margin {margin:.6e}, threshold {threshold:.3e})")]
    NotStrictlyPic { margin: f64, threshold: f64 },

    #[error("eps must be positive, got {0}")]
    NonpositiveEps(f64),

    #[error("scalar curvature must be positive, got {0}")]
    NonpositiveScal(f64),

    #[error("pipeline precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("no admissible b on the grid")]
    NoAdmissibleB(Box<crate::cone::PipelineReport>),

    #[error("flow blew up at t = {}: {reason}", .trajectory.times.last().copied().unwrap_or(0.0))]
    BlowUpReached {
        reason: String,
        trajectory: Box<FlowTrajectory>,
    },

    #[error("tensor is not within {tolerance:.3e} of the cone boundary (margin {margin:.6e})")]
    NotNearBoundary { margin: f64, tolerance: f64 },

    #[error("lemma hypothesis is vacuous: p1 = {0}")]
    NotApplicable(f64),

    #[error("scalar curvature vanishes; no bound available")]
    ZeroScal,

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
