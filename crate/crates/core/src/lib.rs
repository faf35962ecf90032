//! Lambda-Field occupancy mapping.
//!
//! Cells store a Poisson intensity estimated from lidar hit/miss counts, so the
//! probability of colliding along a path is `1 - exp(-Σ a_i λ_i)` regardless of
//! how finely the environment is tessellated. On top of that the crate provides
//! the collision density along a swept path, expected collision risk (momentum
//! loss), a risk-gated trajectory sampling planner, a classical log-odds grid
//! for comparison, and a synthetic lidar simulator.

pub mod bayes;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod par;
pub mod path;
pub mod planner;
pub mod raycast;
pub mod sensor;

pub use bayes::{BayesGrid, InverseSensorModel};
pub use error::{Error, Result};
pub use field::{
    collision_probability, confidence_bounds, integrate, lambda_from_count, lambda_mle, CellLambda, CellStats,
    ConfidenceInterval, Estimate, Estimator, LambdaGrid, SensorModel,
};
pub use geometry::{CellIndex, GridGeometry, Point2, Pose2};
pub use path::{
    collision_cdf, collision_pdf, expected_risk, momentum_risk, path_collision_probability, swept_cells, CrossedCell,
    PathCrossing, RobotShape, SweptCell, VelocityProfile,
};
pub use planner::{plan_step, sample_arcs, PlanDecision, PlanStep, PlannerConfig, TrajectoryCandidate};
pub use raycast::{error_region_cells, trace_beam};
pub use sensor::{apply_beam, simulate_scan, Beam, GroundTruthMap, SimulationConfig};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub struct ReadmeDoctests;
