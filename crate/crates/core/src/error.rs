//! Error type shared across the solver pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("curve leaves the background box: {0}")]
    CurveOutsideDomain(String),
    #[error("tracked curve self-intersects: {0}")]
    SelfIntersection(String),
    #[error("patch transform folds over: {0}")]
    FoldedPatch(String),
    #[error("history record missing: {0}")]
    HistoryMissing(String),
    #[error("no patch region found for query point: {0}")]
    NoRegionFound(String),
    #[error("point left the history domain: {0}")]
    PointOutsideHistoryDomain(String),
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("operator is not positive definite: {0}")]
    NotSPD(String),
    #[error("geometry failure: {0}")]
    Geometry(String),
    #[error("step {step} failed in {phase}: {source}")]
    StepFailed {
        step: usize,
        phase: &'static str,
        #[source]
        source: Box<SolverError>,
    },
}

impl SolverError {
    pub fn in_step(self, step: usize, phase: &'static str) -> SolverError {
        SolverError::StepFailed { step, phase, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
