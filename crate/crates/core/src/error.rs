use alloc::string::String;

use crate::geometry::Segment;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("topology error: {0}")]
    Topology(String),
    #[error("boundary label {0} is outside 1..=7")]
    Label(i64),
    #[error("degenerate parametrization: zero speed at parameter {0}")]
    DegenerateCurve(f64),
    #[error("missing frame data on boundary edge {0}")]
    MissingFrame(usize),
    #[error("hypothesis violated: {what} (|value| = {value:e} at sample {sample})")]
    Hypothesis { what: &'static str, value: f64, sample: usize },
    #[error("inconsistent prescribed traces at node {node} (mismatch {mismatch:e})")]
    InconsistentTraces { node: usize, mismatch: f64 },
    #[error("datum supplied for segment {0} which is absent from the mesh")]
    AbsentSegment(Segment),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is singular or not factorizable (pivot {0})")]
    Singular(usize),
    #[error("rigid mode in kernel: smallest eigenvalue {0:e} vanishes, Korn inequality fails")]
    RigidMode(f64),
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },
    #[error("net boundary flux {flux:e} does not vanish at t = {t} and no pressure segment is present")]
    FluxIncompatible { t: f64, flux: f64 },
    #[error(
        "Picard iteration diverged at step {step} (t = {t}) after {iterations} iterates, residual {residual:e}; smallness hypothesis violated"
    )]
    PicardDivergence { step: usize, t: f64, iterations: usize, residual: f64 },
}
