//! Error types shared across the crate.

use nalgebra::DVector;
use thiserror::Error;

/// Errors raised by the convex-geometry layer.
#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    /// A box with `m` actuators has `2^m` corners; refuse to enumerate past the cap.
    #[error("vertex explosion: {actuators} actuators would produce 2^{actuators} corners (cap is {cap})")]
    VertexExplosion { actuators: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The input point set spans an affine subspace of dimension < 3.
    #[error("degenerate hull: input has affine rank {rank}, need 3")]
    DegenerateHull { rank: usize },

    /// Half-space normalization divides by each facet offset; the origin
    /// must be strictly inside for every offset to be positive.
    #[error("origin not interior: facet offset {offset:.3e} (need > 0)")]
    OriginNotInterior { offset: f64 },

    /// The intersection of two hulls came out empty or flat.
    #[error("degenerate intersection: result has affine rank {rank}, need 3")]
    DegenerateIntersection { rank: usize },

    /// Quickhull could not produce a consistent triangulation.
    #[error("hull construction failed: {0}")]
    HullConstruction(String),
}

/// Errors raised by the quadratic-program solver.
#[derive(Debug, Clone, Error)]
pub enum QpError {
    #[error("QP stalled after {iterations} iterations")]
    Stalled {
        iterations: usize,
        /// Last iterate, for post-mortem inspection.
        last: DVector<f64>,
    },

    /// The equality system has no solution; upstream clipping should have
    /// prevented this.
    #[error("infeasible equality system (residual {residual:.3e})")]
    InfeasibleEqualities { residual: f64 },

    /// Phase 1 terminated with a positive violation: no feasible point exists.
    #[error("infeasible constraints (best violation {violation:.3e})")]
    Infeasible { violation: f64 },

    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Errors raised by model construction and allocation.
#[derive(Debug, Clone, Error)]
pub enum AllocError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error(transparent)]
    Qp(#[from] QpError),

    #[error("effectiveness matrix must have rank 3 (rank {rank})")]
    RankDeficientEffectiveness { rank: usize },

    #[error("dynamic matrix is singular")]
    SingularDynamics,

    #[error("limit bounds out of order at actuator {index}: lower {lower} >= upper {upper}")]
    BadLimits {
        index: usize,
        lower: f64,
        upper: f64,
    },

    #[error("weighting matrix must be symmetric positive definite")]
    BadWeighting,

    #[error("unsupported: exact mode requires diagonal A")]
    ExactModeNeedsDiagonalA,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The candidate filter rejected every boundary point. Cannot happen for
    /// an origin-interior polytope; reported instead of asserted so callers
    /// can log the command that triggered it.
    #[error("clipping produced an empty candidate set for command {tau:?}")]
    EmptyCandidateSet { tau: [f64; 3] },
}

/// Errors raised by the actuator simulator.
#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error("time step {dt} too large for natural frequency {omega0} (need dt <= {max_dt})")]
    StepTooLarge { dt: f64, omega0: f64, max_dt: f64 },

    #[error("actuator count {actuators} does not match model inputs {inputs}")]
    ActuatorCountMismatch { actuators: usize, inputs: usize },

    #[error("maneuver is empty")]
    EmptyManeuver,

    #[error("maneuver samples must be strictly increasing in time (at index {index})")]
    NonMonotonicTime { index: usize },

    #[error(transparent)]
    Alloc(#[from] AllocError),
}
