//! Scenario files.
//!
//! A scenario is a TOML document. Every section except `[world]` is optional
//! and falls back to the outdoor-lidar defaults; unknown keys are rejected.
//! Relative paths are resolved against the directory of the scenario file.
//!
//! ```toml
//! seed = 7
//!
//! [world]
//! truth = "truth.pgm"          # 8-bit PGM, or CSV of col,row,lambda
//!
//! [map]
//! poses = [[2.0, 4.0, 0.0], [3.0, 4.0, 0.0]]
//!
//! [episode]
//! start = [2.0, 4.0, 0.0]
//! reference = "reference.csv"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use lambda_field::{
    io, GridGeometry, GroundTruthMap, InverseSensorModel, PlannerConfig, Point2, Pose2, RobotShape, SensorModel,
    SimulationConfig,
};
use serde::Deserialize;

use crate::error::{at, io_at, CliError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub world: WorldConfig,
    #[serde(default)]
    pub sensor: SensorConfig,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub bayes: BayesConfig,
    #[serde(default)]
    pub robot: RobotConfig,
    #[serde(default)]
    pub planner: PlannerSection,
    pub episode: Option<EpisodeConfig>,
}

/// Ground truth. PGM headers carry their own scale, resolution and origin;
/// CSV truth needs `resolution` and `size` here.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    pub truth: PathBuf,
    pub resolution: Option<f64>,
    pub origin: Option<[f64; 2]>,
    /// Columns and rows.
    pub size: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    pub p_hit: f64,
    pub p_miss: f64,
    /// m²
    pub error_area: f64,
    pub max_range: f64,
    pub beam_count: usize,
    pub beam_width: Option<f64>,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            p_hit: 0.99,
            p_miss: 0.9999,
            error_area: 0.04,
            max_range: 30.0,
            beam_count: 360,
            beam_width: None,
        }
    }
}

impl SensorConfig {
    pub fn model(&self) -> Result<SensorModel> {
        Ok(SensorModel::with_error_area(
            self.p_hit,
            self.p_miss,
            self.error_area,
            self.max_range,
        )?)
    }

    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            beam_count: self.beam_count,
            beam_width: self.beam_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub resolution: f64,
    pub lambda_max: f64,
    /// Scan poses as `[x, y, theta]`.
    pub poses: Vec<[f64; 3]>,
    /// CSV of `x,y,theta`, appended after `poses`.
    pub poses_file: Option<PathBuf>,
    /// Replay this scan log instead of simulating.
    pub scan_log: Option<PathBuf>,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            resolution: 0.1,
            lambda_max: lambda_field::field::DEFAULT_LAMBDA_MAX,
            poses: Vec::new(),
            poses_file: None,
            scan_log: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BayesConfig {
    pub p_occupied_on_hit: f64,
    pub p_occupied_on_miss: f64,
    pub log_odds_max: f64,
}

impl Default for BayesConfig {
    fn default() -> Self {
        let m = InverseSensorModel::default();
        Self {
            p_occupied_on_hit: m.p_occupied_on_hit,
            p_occupied_on_miss: m.p_occupied_on_miss,
            log_odds_max: m.log_odds_max,
        }
    }
}

impl BayesConfig {
    pub fn model(&self) -> InverseSensorModel {
        InverseSensorModel {
            p_occupied_on_hit: self.p_occupied_on_hit,
            p_occupied_on_miss: self.p_occupied_on_miss,
            log_odds_max: self.log_odds_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotConfig {
    pub width: f64,
    pub length: f64,
    /// kg
    pub mass: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            width: 0.5,
            length: 0.6,
            mass: 20.0,
        }
    }
}

impl RobotConfig {
    pub fn shape(&self) -> Result<RobotShape> {
        Ok(RobotShape::new(self.width, self.length, self.mass)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerSection {
    pub v_max: f64,
    pub omega_max: f64,
    pub v_samples: usize,
    pub omega_samples: usize,
    pub horizon: f64,
    pub max_risk: f64,
    pub step: f64,
    pub goal_weight: f64,
}

impl Default for PlannerSection {
    fn default() -> Self {
        let c = PlannerConfig::default();
        Self {
            v_max: c.v_max,
            omega_max: c.omega_max,
            v_samples: c.v_samples,
            omega_samples: c.omega_samples,
            horizon: c.horizon,
            max_risk: c.max_risk,
            step: c.step,
            goal_weight: c.goal_weight,
        }
    }
}

impl PlannerSection {
    pub fn config(&self) -> PlannerConfig {
        PlannerConfig {
            v_max: self.v_max,
            omega_max: self.omega_max,
            v_samples: self.v_samples,
            omega_samples: self.omega_samples,
            horizon: self.horizon,
            max_risk: self.max_risk,
            step: self.step,
            goal_weight: self.goal_weight,
        }
    }
}

/// Closed-loop planning episode.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub start: [f64; 3],
    /// CSV of `x,y,theta`; its last point is the goal.
    pub reference: PathBuf,
    #[serde(default = "defaults::scans_per_step")]
    pub scans_per_step: usize,
    #[serde(default = "defaults::max_steps")]
    pub max_steps: usize,
    #[serde(default = "defaults::goal_tolerance")]
    pub goal_tolerance: f64,
    /// Seconds of the chosen arc executed before replanning.
    #[serde(default = "defaults::control_period")]
    pub control_period: f64,
}

mod defaults {
    pub fn scans_per_step() -> usize {
        3
    }
    pub fn max_steps() -> usize {
        60
    }
    pub fn goal_tolerance() -> f64 {
        0.5
    }
    pub fn control_period() -> f64 {
        1.0
    }
}

impl EpisodeConfig {
    pub fn start_pose(&self) -> Pose2 {
        Pose2::new(self.start[0], self.start[1], self.start[2])
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} must be positive, got {x}")))
    }
}

fn must_exist(name: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} `{}` does not exist", path.display())))
    }
}

fn resolve(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        resolve(base_dir, &mut config.world.truth);
        for p in [
            &mut config.map.poses_file,
            &mut config.map.scan_log,
            &mut config.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base_dir, p);
        }
        if let Some(e) = &mut config.episode {
            resolve(base_dir, &mut e.reference);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_at(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        must_exist("world.truth", &self.world.truth)?;
        if let Some(r) = self.world.resolution {
            positive("world.resolution", r)?;
        }
        if !self.is_pgm_truth() && (self.world.resolution.is_none() || self.world.size.is_none()) {
            return Err(CliError::config(
                "CSV ground truth needs world.resolution and world.size",
            ));
        }
        if let Some([c, r]) = self.world.size {
            if c == 0 || r == 0 {
                return Err(CliError::config("world.size must be positive"));
            }
        }
        self.sensor
            .model()
            .map_err(|e| CliError::config(format!("sensor: {e}")))?;
        if self.sensor.beam_count == 0 {
            return Err(CliError::config("sensor.beam_count must be positive"));
        }
        if let Some(w) = self.sensor.beam_width {
            positive("sensor.beam_width", w)?;
        }
        positive("map.resolution", self.map.resolution)?;
        positive("map.lambda_max", self.map.lambda_max)?;
        if self.map.poses.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CliError::config("map.poses must be finite"));
        }
        if let Some(p) = &self.map.poses_file {
            must_exist("map.poses_file", p)?;
        }
        if let Some(p) = &self.map.scan_log {
            must_exist("map.scan_log", p)?;
        }
        self.bayes
            .model()
            .validate()
            .map_err(|e| CliError::config(format!("bayes: {e}")))?;
        self.robot
            .shape()
            .map_err(|e| CliError::config(format!("robot: {e}")))?;
        self.planner
            .config()
            .validate()
            .map_err(|e| CliError::config(format!("planner: {e}")))?;
        if let Some(e) = &self.episode {
            must_exist("episode.reference", &e.reference)?;
            positive("episode.goal_tolerance", e.goal_tolerance)?;
            positive("episode.control_period", e.control_period)?;
            if e.start.iter().any(|v| !v.is_finite()) {
                return Err(CliError::config("episode.start must be finite"));
            }
        }
        Ok(())
    }

    fn is_pgm_truth(&self) -> bool {
        self.world
            .truth
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
    }

    pub fn load_truth(&self) -> Result<GroundTruthMap> {
        let path = &self.world.truth;
        let mut truth = if self.is_pgm_truth() {
            io::load_truth_pgm(path, self.world.resolution).map_err(at(path))?
        } else {
            let [cols, rows] = self.world.size.expect("validated");
            let origin = self
                .world
                .origin
                .map_or(Point2::new(0.0, 0.0), |[x, y]| Point2::new(x, y));
            let g = GridGeometry::new(origin, self.world.resolution.expect("validated"), cols, rows)?;
            io::load_truth_csv(path, g).map_err(at(path))?
        };
        // an explicit origin also relocates a PGM map
        if let (true, Some([x, y])) = (self.is_pgm_truth(), self.world.origin) {
            let g = truth.geometry();
            let moved = GridGeometry::new(Point2::new(x, y), g.resolution(), g.n_cols(), g.n_rows())?;
            truth = GroundTruthMap::from_values(moved, truth.values().to_vec())?;
        }
        Ok(truth)
    }

    /// Map grid covering the ground-truth extent at `map.resolution`.
    pub fn map_geometry(&self, truth: &GroundTruthMap) -> Result<GridGeometry> {
        let g = truth.geometry();
        Ok(GridGeometry::covering(
            g.origin(),
            g.width(),
            g.height(),
            self.map.resolution,
        )?)
    }

    pub fn scan_poses(&self) -> Result<Vec<Pose2>> {
        let mut poses: Vec<Pose2> = self.map.poses.iter().map(|&[x, y, t]| Pose2::new(x, y, t)).collect();
        if let Some(p) = &self.map.poses_file {
            poses.extend(io::load_path(p).map_err(at(p))?);
        }
        Ok(poses)
    }
}
