//! Scenario fixtures written to temporary directories.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use lambda_field::{io, CellIndex, CellStats, GridGeometry, GroundTruthMap, LambdaGrid, Point2, Pose2, SensorModel};

pub struct Scenario {
    pub dir: tempfile::TempDir,
    pub config: PathBuf,
}

impl Scenario {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn write_truth(dir: &Path, truth: &GroundTruthMap) {
    io::write_truth_csv(truth, File::create(dir.join("truth.csv")).unwrap()).unwrap();
}

fn write_reference(dir: &Path, points: &[(f64, f64)]) {
    let poses: Vec<Pose2> = points.iter().map(|&(x, y)| Pose2::new(x, y, 0.0)).collect();
    io::write_path(&poses, File::create(dir.join("reference.csv")).unwrap()).unwrap();
}

fn scenario(truth: &GroundTruthMap, body: &str) -> Scenario {
    let dir = tempfile::tempdir().unwrap();
    write_truth(dir.path(), truth);
    let g = truth.geometry();
    let text = format!(
        "seed = 7\n\n[world]\ntruth = \"truth.csv\"\nresolution = {}\norigin = [{}, {}]\nsize = [{}, {}]\n\n{body}",
        g.resolution(),
        g.origin().x,
        g.origin().y,
        g.n_cols(),
        g.n_rows()
    );
    let config = dir.path().join("scenario.toml");
    fs::write(&config, text).unwrap();
    Scenario { dir, config }
}

/// A 14 m x 8 m walled yard with nothing inside. The robot starts at (2, 4)
/// and follows a straight reference to (12, 4).
pub fn open_field() -> Scenario {
    let g = GridGeometry::new(Point2::new(0.0, 0.0), 0.1, 140, 80).unwrap();
    let truth = GroundTruthMap::from_fn(g, |p| {
        if p.x < 0.3 || p.x > 13.7 || p.y < 0.3 || p.y > 7.7 {
            100.0
        } else {
            0.0
        }
    })
    .unwrap();
    let s = scenario(
        &truth,
        "[episode]\nstart = [2.0, 4.0, 0.0]\nreference = \"reference.csv\"\n",
    );
    write_reference(s.dir.path(), &[(2.0, 4.0), (12.0, 4.0)]);
    s
}

/// A 0.6 m wide corridor ending in a wall 0.15 m ahead of the robot, with the
/// reference path continuing through the wall.
pub fn blocked_corridor() -> Scenario {
    let g = GridGeometry::new(Point2::new(0.0, 0.0), 0.1, 80, 40).unwrap();
    let truth = GroundTruthMap::from_fn(g, |p| {
        let corridor = p.x > 0.5 && p.x < 3.0 && p.y > 1.7 && p.y < 2.3;
        if corridor {
            0.0
        } else {
            100.0
        }
    })
    .unwrap();
    let s = scenario(
        &truth,
        "[episode]\nstart = [2.85, 2.0, 0.0]\nreference = \"reference.csv\"\nmax_steps = 5\n",
    );
    write_reference(s.dir.path(), &[(2.85, 2.0), (7.0, 2.0)]);
    s
}

/// A disk of sparse matter (λ* = 2 m⁻², bushes) circled by `scans` scan
/// poses.
pub fn roundabout(scans: usize) -> Scenario {
    let g = GridGeometry::new(Point2::new(0.0, 0.0), 0.1, 80, 80).unwrap();
    let center = Point2::new(4.0, 4.0);
    let truth = GroundTruthMap::from_fn(g, |p| if p.distance(&center) < 1.0 { 2.0 } else { 0.0 }).unwrap();
    let poses: Vec<Pose2> = (0..scans)
        .map(|k| {
            let phi = TAU * k as f64 / scans as f64;
            Pose2::new(4.0 + 2.5 * phi.cos(), 4.0 + 2.5 * phi.sin(), phi)
        })
        .collect();
    let s = scenario(&truth, "[map]\nposes_file = \"poses.csv\"\n");
    io::write_path(&poses, File::create(s.path("poses.csv")).unwrap()).unwrap();
    s
}

/// Cells whose true intensity is positive.
pub fn truth_region(config: &Path) -> Vec<CellIndex> {
    let c = lambda_field_cli::ScenarioConfig::load(config).unwrap();
    let truth = c.load_truth().unwrap();
    truth
        .geometry()
        .cells()
        .filter(|&cell| truth.intensity(cell).unwrap() > 0.0)
        .collect()
}

/// A row of 59 cells of 0.2 m: 58 with λ̂ ≈ 0.1 and one with λ̂ ≈ 2, written
/// as a lambda dump, plus a path whose 0.2 m wide sweep covers exactly that
/// row.
pub fn fig4_field(dir: &Path) -> (PathBuf, PathBuf) {
    let g = GridGeometry::new(Point2::new(0.0, 0.0), 0.2, 61, 3).unwrap();
    let mut grid = LambdaGrid::new(g, SensorModel::default(), 100.0).unwrap();
    for col in 1..60 {
        // ln(1 + 1/250) / 0.04 = 0.0998; ln(1 + 1/12) / 0.04 = 2.001
        let stats = if col == 30 {
            CellStats::new(1, 12)
        } else {
            CellStats::new(1, 250)
        };
        grid.set_stats(CellIndex::new(col, 1), stats).unwrap();
    }
    let dump = dir.join("fig4.dump");
    io::save_lambda_dump(&grid, &dump).unwrap();
    let path = dir.join("fig4_path.csv");
    let poses = [Pose2::new(0.2, 0.3, 0.0), Pose2::new(12.0, 0.3, 0.0)];
    io::write_path(&poses, File::create(&path).unwrap()).unwrap();
    (dump, path)
}

/// Path for the double-size-cell comparison: a 0.5 m wide strip x ∈ [0, 0.5]
/// from y = 0 to y = 2.
pub fn fig1_path(dir: &Path) -> PathBuf {
    let path = dir.join("fig1_path.csv");
    io::write_path(
        &[Pose2::new(0.25, 0.0, FRAC_PI_2), Pose2::new(0.25, 2.0, FRAC_PI_2)],
        File::create(&path).unwrap(),
    )
    .unwrap();
    path
}
