//! Trajectory-sampling local planner gated by upper-bound expected risk.
//!
//! Every planning step samples constant `(v, ω)` arcs over a fixed horizon,
//! scores each by the expected momentum loss computed with the upper
//! confidence bound of every crossed cell, discards arcs above the allowed
//! risk, and follows the admissible arc that best tracks a reference path.
//! When no arc is admissible the robot stays put.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::field::{Estimator, LambdaGrid};
use crate::geometry::{Point2, Pose2};
use crate::par;
use crate::path::{expected_risk, momentum_risk, RobotShape, VelocityProfile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// m/s
    pub v_max: f64,
    /// rad/s
    pub omega_max: f64,
    pub v_samples: usize,
    pub omega_samples: usize,
    /// s
    pub horizon: f64,
    /// Admissibility gate on upper-bound expected risk, kg·m/s.
    pub max_risk: f64,
    /// Spacing of arc samples, m.
    pub step: f64,
    /// Weight of the endpoint-to-goal distance in the closeness score. The
    /// goal is the last reference point; 0 scores by path distance alone.
    pub goal_weight: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            v_max: 1.0,
            omega_max: 1.0,
            v_samples: 5,
            omega_samples: 9,
            horizon: 1.0,
            max_risk: 1.0,
            step: 0.05,
            goal_weight: 1.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
            }
        };
        positive("v_max", self.v_max)?;
        positive("horizon", self.horizon)?;
        positive("max_risk", self.max_risk)?;
        positive("step", self.step)?;
        if !(self.omega_max >= 0.0 && self.omega_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega_max must be nonnegative, got {}",
                self.omega_max
            )));
        }
        if !(self.goal_weight >= 0.0 && self.goal_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "goal_weight must be nonnegative, got {}",
                self.goal_weight
            )));
        }
        if self.v_samples == 0 || self.omega_samples == 0 {
            return Err(Error::InvalidParameter(
                "at least one sample per axis is required".into(),
            ));
        }
        Ok(())
    }

    /// Linear speeds `v_max·k/n` for `k = 1..=n`. Standing still is the stop
    /// decision, not a candidate.
    pub fn speeds(&self) -> Vec<f64> {
        (1..=self.v_samples)
            .map(|k| self.v_max * k as f64 / self.v_samples as f64)
            .collect()
    }

    /// Evenly spaced turn rates over `[-ω_max, ω_max]`; a single sample is 0.
    pub fn turn_rates(&self) -> Vec<f64> {
        let n = self.omega_samples;
        if n == 1 {
            return vec![0.0];
        }
        (0..n)
            .map(|k| -self.omega_max + 2.0 * self.omega_max * k as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCandidate {
    pub v: f64,
    pub omega: f64,
    pub horizon: f64,
    /// Starts at the current pose.
    pub poses: Vec<Pose2>,
    /// Upper-bound expected risk, kg·m/s. Infinite until evaluated, and for
    /// arcs that leave the map.
    pub risk_upper: f64,
    /// Lower is better, meters. Infinite until evaluated.
    pub closeness: f64,
}

impl TrajectoryCandidate {
    pub fn end(&self) -> Pose2 {
        *self.poses.last().expect("arcs contain at least their start pose")
    }
}

/// Poses along a constant `(v, ω)` unicycle arc, sampled every `step` meters
/// of arc length (at least two poses).
pub fn integrate_arc(start: Pose2, v: f64, omega: f64, horizon: f64, step: f64) -> Vec<Pose2> {
    let length = v.abs() * horizon;
    let n = ((length / step).ceil() as usize).max(1);
    (0..=n)
        .map(|k| {
            let t = horizon * k as f64 / n as f64;
            let theta = start.theta + omega * t;
            if omega.abs() < 1e-12 {
                Pose2::new(
                    start.x + v * t * start.theta.cos(),
                    start.y + v * t * start.theta.sin(),
                    theta,
                )
            } else {
                let r = v / omega;
                Pose2::new(
                    start.x + r * (theta.sin() - start.theta.sin()),
                    start.y - r * (theta.cos() - start.theta.cos()),
                    theta,
                )
            }
        })
        .collect()
}

/// Candidate arcs, speeds outermost.
pub fn sample_arcs(pose: Pose2, config: &PlannerConfig) -> Vec<TrajectoryCandidate> {
    let turn_rates = config.turn_rates();
    config
        .speeds()
        .into_iter()
        .flat_map(|v| turn_rates.iter().map(move |&omega| (v, omega)))
        .map(|(v, omega)| TrajectoryCandidate {
            v,
            omega,
            horizon: config.horizon,
            poses: integrate_arc(pose, v, omega, config.horizon, config.step),
            risk_upper: f64::INFINITY,
            closeness: f64::INFINITY,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanDecision {
    Move(TrajectoryCandidate),
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub decision: PlanDecision,
    pub n_admissible: usize,
    /// Every evaluated candidate, in sampling order.
    pub candidates: Vec<TrajectoryCandidate>,
}

impl PlanStep {
    pub fn is_stop(&self) -> bool {
        matches!(self.decision, PlanDecision::Stop)
    }
}

fn distance_to_polyline(p: &Point2, path: &[Point2]) -> f64 {
    match path {
        [] => f64::INFINITY,
        [only] => p.distance(only),
        _ => path
            .windows(2)
            .map(|w| p.distance_to_segment(&w[0], &w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Mean distance of the arc samples to the reference polyline, plus the
/// weighted distance from the arc end to the reference goal.
pub fn closeness(poses: &[Pose2], reference: &[Point2], goal_weight: f64) -> f64 {
    let mean = poses
        .iter()
        .map(|p| distance_to_polyline(&p.position(), reference))
        .sum::<f64>()
        / poses.len() as f64;
    let goal = reference
        .last()
        .map_or(0.0, |g| poses[poses.len() - 1].position().distance(g));
    mean + goal_weight * goal
}

/// Lower closeness first; ties broken by lower risk, lower |ω|, lower v, then
/// ω itself so the order is total.
fn preference(a: &TrajectoryCandidate, b: &TrajectoryCandidate) -> Ordering {
    a.closeness
        .total_cmp(&b.closeness)
        .then(a.risk_upper.total_cmp(&b.risk_upper))
        .then(a.omega.abs().total_cmp(&b.omega.abs()))
        .then(a.v.total_cmp(&b.v))
        .then(a.omega.total_cmp(&b.omega))
}

/// One planning step over a snapshot of the field.
pub fn plan_step(
    grid: &LambdaGrid,
    pose: Pose2,
    reference: &[Point2],
    shape: &RobotShape,
    config: &PlannerConfig,
) -> Result<PlanStep> {
    config.validate()?;
    if !grid.geometry().contains(pose.position()) {
        return Err(Error::OutsideGrid { x: pose.x, y: pose.y });
    }
    if reference.is_empty() {
        return Err(Error::InvalidParameter("reference path is empty".into()));
    }
    let arcs = sample_arcs(pose, config);
    let candidates: Vec<TrajectoryCandidate> = par::map(&arcs, |arc| {
        let mut c = arc.clone();
        c.closeness = closeness(&c.poses, reference, config.goal_weight);
        // Arcs that leave the map keep an infinite risk.
        if let Ok(crossing) = grid.crossing(&c.poses, shape) {
            let profile = VelocityProfile::constant(c.v.abs()).expect("speed is finite");
            c.risk_upper = expected_risk(&crossing, momentum_risk(shape, &profile), Estimator::Upper);
        }
        c
    });
    let admissible: Vec<&TrajectoryCandidate> = candidates.iter().filter(|c| c.risk_upper <= config.max_risk).collect();
    let decision = admissible
        .iter()
        .min_by(|a, b| preference(a, b))
        .map_or(PlanDecision::Stop, |c| PlanDecision::Move((*c).clone()));
    Ok(PlanStep {
        decision,
        n_admissible: admissible.len(),
        candidates,
    })
}
