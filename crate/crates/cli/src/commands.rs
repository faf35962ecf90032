//! The subcommands, as library functions returning their summaries.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use lambda_field::io::{self, PlannerLogRow, ScanRecord};
use lambda_field::planner::integrate_arc;
use lambda_field::sensor::{scan_seed, simulate_scans};
use lambda_field::{
    expected_risk, momentum_risk, path::risk_report, path_collision_probability, plan_step, simulate_scan, swept_cells,
    BayesGrid, CellLambda, Estimator, GridGeometry, GroundTruthMap, LambdaGrid, PathCrossing, PlanDecision, Point2,
    Pose2, RobotShape, VelocityProfile,
};

use crate::config::ScenarioConfig;
use crate::error::{at, io_at, CliError, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "LAMBDA_FIELD_OUT";

/// Output directory: the flag, else the scenario's `output_dir`, else
/// `$LAMBDA_FIELD_OUT`, else the current directory.
pub fn output_dir(flag: Option<&Path>, config: Option<&ScenarioConfig>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.and_then(|c| c.output_dir.clone()))
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_at(dir))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_at(path))?))
}

/// Runs `write` against a fresh file at `dir/name` and returns the path.
fn emit(dir: &Path, name: &str, write: impl FnOnce(BufWriter<File>) -> lambda_field::Result<()>) -> Result<PathBuf> {
    let path = dir.join(name);
    write(create(&path)?).map_err(at(&path))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSummary {
    pub scans: usize,
    pub beams: usize,
    pub files: Vec<PathBuf>,
}

/// Scans of the scenario: replayed from its scan log, or simulated at its
/// poses with per-scan seeds derived from `seed`.
pub fn scenario_scans(config: &ScenarioConfig, truth: &GroundTruthMap, seed: u64) -> Result<Vec<ScanRecord>> {
    if let Some(log) = &config.map.scan_log {
        return io::load_scan_log(log).map_err(at(log));
    }
    let poses = config.scan_poses()?;
    let scans = simulate_scans(
        truth,
        &poses,
        &config.sensor.model()?,
        &config.sensor.simulation(),
        seed,
    )?;
    Ok(poses
        .iter()
        .zip(&scans)
        .enumerate()
        .flat_map(|(k, (pose, beams))| beams.iter().map(move |b| ScanRecord::new(k as f64, *pose, b)))
        .collect())
}

/// Both maps built from the scenario's scans.
pub fn build_maps(config: &ScenarioConfig, seed: u64) -> Result<(LambdaGrid, BayesGrid, Vec<ScanRecord>)> {
    let truth = config.load_truth()?;
    let geometry = config.map_geometry(&truth)?;
    let records = scenario_scans(config, &truth, seed)?;
    let mut lambda = LambdaGrid::new(geometry, config.sensor.model()?, config.map.lambda_max)?;
    let mut bayes = BayesGrid::new(geometry, config.bayes.model())?;
    for (_, _, beams) in io::group_scans(&records) {
        lambda.apply_scan(&beams)?;
        bayes.apply_scan(&beams)?;
    }
    Ok((lambda, bayes, records))
}

/// Builds both maps and writes their dumps, CSV tables, PGM renders and the
/// scan log.
pub fn cmd_map(config: &ScenarioConfig, seed: u64, out: &Path) -> Result<MapSummary> {
    let (lambda, bayes, records) = build_maps(config, seed)?;
    prepare(out)?;
    let files = vec![
        emit(out, "lambda.dump", |w| io::write_lambda_dump(&lambda, w))?,
        emit(out, "bayes.dump", |w| io::write_bayes_dump(&bayes, w))?,
        emit(out, "lambda.csv", |w| io::write_lambda_csv(&lambda, w))?,
        emit(out, "bayes.csv", |w| io::write_bayes_csv(&bayes, w))?,
        emit(out, "lambda.pgm", |w| io::write_lambda_pgm(&lambda, w))?,
        emit(out, "bayes.pgm", |w| io::write_bayes_pgm(&bayes, w))?,
        emit(out, "scans.csv", |w| io::write_scan_log(&records, w))?,
    ];
    Ok(MapSummary {
        scans: io::group_scans(&records).len(),
        beams: records.len(),
        files,
    })
}

/// Simulates the scenario's scans and writes only the scan log.
pub fn cmd_simulate_scans(config: &ScenarioConfig, seed: u64, out: &Path) -> Result<MapSummary> {
    let truth = config.load_truth()?;
    let records = scenario_scans(config, &truth, seed)?;
    prepare(out)?;
    let file = emit(out, "scans.csv", |w| io::write_scan_log(&records, w))?;
    Ok(MapSummary {
        scans: io::group_scans(&records).len(),
        beams: records.len(),
        files: vec![file],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Lambda,
    Bayes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalPathArgs {
    /// A lambda dump, or a bayes dump for [`Engine::Bayes`].
    pub dump: PathBuf,
    pub path: PathBuf,
    pub engine: Engine,
    pub bound: Estimator,
    pub shape: RobotShape,
    /// Constant speed for the momentum risk, m/s.
    pub speed: f64,
    /// Use `r ≡ 1`, making the expected risk a collision probability.
    pub unit_risk: bool,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub p_collision: f64,
    /// Lambda engine only.
    pub expected_risk: Option<f64>,
    pub cells: usize,
}

pub fn cmd_eval_path(args: &EvalPathArgs) -> Result<EvalSummary> {
    let poses = io::load_path(&args.path).map_err(at(&args.path))?;
    if poses.len() < 2 {
        return Err(CliError::Domain(lambda_field::Error::InvalidParameter(
            "a path needs at least two poses".into(),
        )));
    }
    match args.engine {
        Engine::Lambda => {
            let grid = io::load_lambda_dump(&args.dump).map_err(at(&args.dump))?;
            let crossing = grid.crossing(&poses, &args.shape)?;
            let p = path_collision_probability(&crossing, args.bound);
            let rows = if args.unit_risk {
                risk_report(&crossing, |_| 1.0, args.bound)
            } else {
                let profile = VelocityProfile::constant(args.speed)?;
                risk_report(&crossing, momentum_risk(&args.shape, &profile), args.bound)
            };
            let risk = if args.unit_risk {
                expected_risk(&crossing, |_| 1.0, args.bound)
            } else {
                rows.iter().map(|r| r.partial_risk).sum()
            };
            if let Some(report) = &args.report {
                if let Some(dir) = report.parent().filter(|d| !d.as_os_str().is_empty()) {
                    prepare(dir)?;
                }
                let w = create(report)?;
                io::write_risk_report(grid.geometry(), &rows, w).map_err(at(report))?;
            }
            Ok(EvalSummary {
                p_collision: p,
                expected_risk: Some(risk),
                cells: crossing.len(),
            })
        }
        Engine::Bayes => {
            let grid = io::load_bayes_dump(&args.dump).map_err(at(&args.dump))?;
            let swept = swept_cells(grid.geometry(), &poses, args.shape.width)?;
            let p = grid.naive_path_probability(swept.iter().map(|s| s.cell))?;
            Ok(EvalSummary {
                p_collision: p,
                expected_risk: None,
                cells: swept.len(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanSummary {
    pub steps: usize,
    pub stops: usize,
    pub reached: bool,
    pub final_pose: Pose2,
    pub goal_distance: f64,
    pub max_logged_risk: f64,
    pub files: Vec<PathBuf>,
}

/// Closed-loop episode. Each step the robot scans from where it stands,
/// integrates the scans, plans, and drives the chosen arc for one control
/// period; a STOP keeps it in place for that period. The episode ends at the
/// goal or after `max_steps`.
pub fn cmd_plan(config: &ScenarioConfig, seed: u64, out: &Path, reference: Option<&Path>) -> Result<PlanSummary> {
    let episode = config
        .episode
        .as_ref()
        .ok_or_else(|| CliError::config("the scenario has no [episode] section"))?;
    let reference_path = reference.unwrap_or(&episode.reference);
    let reference: Vec<Point2> = io::load_path(reference_path)
        .map_err(at(reference_path))?
        .iter()
        .map(Pose2::position)
        .collect();
    let goal = *reference
        .last()
        .ok_or_else(|| CliError::config("the reference path is empty"))?;

    let truth = config.load_truth()?;
    let sensor = config.sensor.model()?;
    let simulation = config.sensor.simulation();
    let shape = config.robot.shape()?;
    let planner = config.planner.config();
    let mut grid = LambdaGrid::new(config.map_geometry(&truth)?, sensor, config.map.lambda_max)?;

    // prior mapping from the scenario's scan poses, if any
    let prior = config.scan_poses()?;
    for scan in simulate_scans(&truth, &prior, &sensor, &simulation, seed)? {
        grid.apply_scan(&scan)?;
    }
    let mut next_scan = prior.len() as u64;

    let mut pose = episode.start_pose();
    let mut trace = vec![pose];
    let mut log = Vec::new();
    let mut reached = pose.position().distance(&goal) <= episode.goal_tolerance;
    for step in 0..episode.max_steps {
        if reached {
            break;
        }
        for _ in 0..episode.scans_per_step {
            let beams = simulate_scan(&truth, pose, &sensor, &simulation, scan_seed(seed, next_scan))?;
            grid.apply_scan(&beams)?;
            next_scan += 1;
        }
        let t = step as f64 * episode.control_period;
        let decision = plan_step(&grid, pose, &reference, &shape, &planner)?;
        match &decision.decision {
            PlanDecision::Move(c) => {
                let executed = integrate_arc(pose, c.v, c.omega, episode.control_period, planner.step);
                pose = *executed.last().expect("arcs have an end");
                log.push(PlannerLogRow {
                    t,
                    v: c.v,
                    omega: c.omega,
                    risk_upper: c.risk_upper,
                    n_admissible: decision.n_admissible,
                    stopped: false,
                });
            }
            PlanDecision::Stop => log.push(PlannerLogRow {
                t,
                v: 0.0,
                omega: 0.0,
                risk_upper: 0.0,
                n_admissible: 0,
                stopped: true,
            }),
        }
        trace.push(pose);
        reached = pose.position().distance(&goal) <= episode.goal_tolerance;
    }

    prepare(out)?;
    let files = vec![
        emit(out, "plan_log.csv", |w| io::write_planner_log(&log, w))?,
        emit(out, "trajectory.csv", |w| io::write_path(&trace, w))?,
        emit(out, "lambda.dump", |w| io::write_lambda_dump(&grid, w))?,
    ];
    Ok(PlanSummary {
        steps: log.len(),
        stops: log.iter().filter(|r| r.stopped).count(),
        reached,
        final_pose: pose,
        goal_distance: pose.position().distance(&goal),
        max_logged_risk: log.iter().map(|r| r.risk_upper).fold(0.0, f64::max),
        files,
    })
}

/// A uniform environment in which every cell, at any resolution, has the
/// same occupancy probability, compared with the intensity field that gives
/// that probability to a cell of the calibration resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareArgs {
    pub probability: f64,
    pub calibration_resolution: f64,
    pub resolutions: Vec<f64>,
    pub origin: Point2,
    pub extent: (f64, f64),
    pub path: PathBuf,
    pub width: f64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CompareRow {
    pub resolution: f64,
    #[serde(rename = "P_lambda")]
    pub p_lambda: f64,
    #[serde(rename = "P_bayes_naive")]
    pub p_bayes_naive: f64,
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Vec<CompareRow>> {
    let domain = |m: String| CliError::Domain(lambda_field::Error::InvalidParameter(m));
    if !(args.probability > 0.0 && args.probability < 1.0) {
        return Err(domain(format!(
            "probability must lie in (0, 1), got {}",
            args.probability
        )));
    }
    if !(args.calibration_resolution > 0.0) {
        return Err(domain("calibration resolution must be positive".into()));
    }
    let poses = io::load_path(&args.path).map_err(at(&args.path))?;
    let lambda = -(-args.probability).ln_1p() / (args.calibration_resolution * args.calibration_resolution);
    let rows = args
        .resolutions
        .iter()
        .map(|&res| {
            let g = GridGeometry::covering(args.origin, args.extent.0, args.extent.1, res)?;
            let swept = swept_cells(&g, &poses, args.width)?;
            let crossing = PathCrossing::with_lambdas(&swept, |_| CellLambda::exact(lambda))?;
            let p_bayes = lambda_field::bayes::naive_path_probability(&vec![args.probability; swept.len()]);
            Ok(CompareRow {
                resolution: res,
                p_lambda: path_collision_probability(&crossing, Estimator::Mle),
                p_bayes_naive: p_bayes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(out) = &args.out {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            prepare(dir)?;
        }
        let mut w = csv::Writer::from_writer(create(out)?);
        for r in &rows {
            w.serialize(r).map_err(|e| at(out)(e.into()))?;
        }
        w.flush().map_err(io_at(out))?;
    }
    Ok(rows)
}
