use thiserror::Error;

use crate::electrostatics::PoissonSolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a time step was refused. The driver answers every variant by halving dt.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepRejection {
    #[error("{species} density left [0, c_bar]: min {min:e}, max {max:e}")]
    MaximumPrinciple {
        species: &'static str,
        min: f64,
        max: f64,
    },
    #[error("director escaped the barrier: sup|n| = {sup_n} > {bound}")]
    Barrier { sup_n: f64, bound: f64 },
    #[error("barrier term too stiff for explicit treatment: dt * stiffness = {product}")]
    BarrierStiffness { product: f64 },
    #[error("CFL number {cfl} exceeds {limit}")]
    Cfl { cfl: f64, limit: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("charge neutrality violated: integral of c_p - c_m = {imbalance:e} (allowed {allowed:e})")]
    NonNeutralCharge { imbalance: f64, allowed: f64 },
    #[error("potential solve did not converge after {} iterations (residual {:e})", .0.iterations, .0.final_residual)]
    NoConvergence(PoissonSolveReport),
    #[error("director norm {sup_n} exceeds dielectric admissibility bound {bound}")]
    DirectorBlowThrough { sup_n: f64, bound: f64 },
    #[error("step rejected: {0}")]
    StepRejected(StepRejection),
    #[error("Leslie coefficient admissibility gate failed: {0}")]
    InadmissibleCoefficients(String),
    #[error("unknown initial-condition preset `{0}`")]
    InvalidPreset(String),
    #[error("initial data hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("weak-form check needs at least 3 stored states, got {0}")]
    InsufficientTrajectory(usize),
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<StepRejection> for Error {
    fn from(r: StepRejection) -> Self {
        Error::StepRejected(r)
    }
}
