//! Turning lidar beams into hit/miss counts, and a synthetic lidar over a
//! ground-truth intensity map.

use std::f64::consts::TAU;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{LambdaGrid, SensorModel};
use crate::geometry::{CellIndex, GridGeometry, Point2, Pose2};
use crate::par;
use crate::raycast::{error_region_cells, trace_beam};

/// One lidar reading. `range` equals the sensor max range when `hit` is false.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    pub origin: Point2,
    /// World-frame direction, radians.
    pub angle: f64,
    pub range: f64,
    pub hit: bool,
}

impl Beam {
    pub fn direction(&self) -> (f64, f64) {
        (self.angle.cos(), self.angle.sin())
    }

    pub fn endpoint(&self) -> Point2 {
        let (c, s) = self.direction();
        Point2::new(self.origin.x + self.range * c, self.origin.y + self.range * s)
    }
}

/// Integrates one beam into the grid.
///
/// For a return, the cells of the error disk around the measured point each
/// gain a hit, and the cells the ray crossed before first entering that disk
/// each gain a miss. A cell is never counted as both. A beam without return
/// adds a miss to every cell it crosses.
pub fn apply_beam(grid: &mut LambdaGrid, beam: &Beam) -> Result<()> {
    let geometry = *grid.geometry();
    let end = beam.endpoint();
    let crossed = trace_beam(&geometry, beam.origin, end)?;
    if !beam.hit {
        for (cell, _) in crossed {
            grid.stats_mut(cell).add_miss();
        }
        return Ok(());
    }
    let region = error_region_cells(&geometry, end, grid.sensor().error_radius);
    for (cell, _) in crossed {
        if region.contains(&cell) {
            break;
        }
        grid.stats_mut(cell).add_miss();
    }
    for cell in region {
        grid.stats_mut(cell).add_hit();
    }
    Ok(())
}

impl LambdaGrid {
    pub fn apply_beam(&mut self, beam: &Beam) -> Result<()> {
        apply_beam(self, beam)
    }

    pub fn apply_scan(&mut self, beams: &[Beam]) -> Result<()> {
        beams.iter().try_for_each(|b| apply_beam(self, b))
    }
}

/// True environment used by the simulator: a collision intensity per cell,
/// in 1/m². Infinite values model perfectly hard obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthMap {
    geometry: GridGeometry,
    intensity: Vec<f64>,
}

impl GroundTruthMap {
    pub fn empty(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            intensity: vec![0.0; geometry.len()],
        }
    }

    pub fn from_values(geometry: GridGeometry, intensity: Vec<f64>) -> Result<Self> {
        if intensity.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "expected {} intensities, got {}",
                geometry.len(),
                intensity.len()
            )));
        }
        if let Some(bad) = intensity.iter().find(|l| !(**l >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "ground-truth intensity must be nonnegative, got {bad}"
            )));
        }
        Ok(Self { geometry, intensity })
    }

    /// Builds a map by evaluating `f` at every cell center.
    pub fn from_fn(geometry: GridGeometry, f: impl Fn(Point2) -> f64) -> Result<Self> {
        let values = geometry.cells().map(|c| f(geometry.cell_center(c))).collect();
        Self::from_values(geometry, values)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn intensity(&self, cell: CellIndex) -> Result<f64> {
        self.geometry.check(cell)?;
        Ok(self.intensity[self.geometry.linear(cell)])
    }

    pub fn set_intensity(&mut self, cell: CellIndex, lambda: f64) -> Result<()> {
        self.geometry.check(cell)?;
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ground-truth intensity must be nonnegative, got {lambda}"
            )));
        }
        let i = self.geometry.linear(cell);
        self.intensity[i] = lambda;
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.intensity
    }

    /// Distance along the ray to the first physical collision, if any, given
    /// an `Exp(1)` threshold. Within a crossed cell of chord `l` the ray is
    /// stopped with probability `1 - exp(-l * beam_width * λ*)`.
    fn first_collision(
        &self,
        origin: Point2,
        angle: f64,
        max_range: f64,
        beam_width: f64,
        threshold: f64,
    ) -> Result<Option<f64>> {
        let end = Point2::new(origin.x + max_range * angle.cos(), origin.y + max_range * angle.sin());
        let mut travelled = 0.0;
        let mut accumulated = 0.0;
        for (cell, chord) in trace_beam(&self.geometry, origin, end)? {
            let lambda = self.intensity[self.geometry.linear(cell)];
            let rate = chord * beam_width * lambda;
            if lambda > 0.0 && accumulated + rate >= threshold {
                let inside = ((threshold - accumulated) / (beam_width * lambda)).clamp(0.0, chord);
                return Ok(Some(travelled + inside));
            }
            accumulated += rate;
            travelled += chord;
        }
        Ok(None)
    }
}

/// Knobs of the synthetic lidar beyond the [`SensorModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    /// Evenly spaced beams over a full turn.
    pub beam_count: usize,
    /// Width used to turn a 1-D ray into an area when drawing collisions;
    /// `None` uses the ground-truth resolution.
    pub beam_width: Option<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            beam_count: 360,
            beam_width: None,
        }
    }
}

/// Simulates one full scan from `pose`. Deterministic for a given seed.
///
/// Per beam: the true return is drawn from the ground truth; with probability
/// `1 - p_hit` a spurious return is placed uniformly along the ray before it;
/// otherwise with probability `1 - p_miss` a true return is dropped. Reported
/// returns are displaced uniformly within the error disk.
pub fn simulate_scan(
    truth: &GroundTruthMap,
    pose: Pose2,
    sensor: &SensorModel,
    config: &SimulationConfig,
    seed: u64,
) -> Result<Vec<Beam>> {
    let origin = pose.position();
    if !truth.geometry.contains(origin) {
        return Err(Error::OutsideGrid {
            x: origin.x,
            y: origin.y,
        });
    }
    if config.beam_count == 0 {
        return Err(Error::InvalidParameter("beam count must be positive".into()));
    }
    let beam_width = config.beam_width.unwrap_or(truth.geometry.resolution());
    if !(beam_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beam width must be positive, got {beam_width}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_range = sensor.max_range;
    let mut beams = Vec::with_capacity(config.beam_count);
    for j in 0..config.beam_count {
        let angle = wrap_angle(pose.theta + TAU * j as f64 / config.beam_count as f64);
        let threshold = -(1.0 - rng.gen::<f64>()).ln();
        let truth_range = truth.first_collision(origin, angle, max_range, beam_width, threshold)?;

        let spurious = rng.gen::<f64>() < 1.0 - sensor.p_hit;
        let dropped = rng.gen::<f64>() < 1.0 - sensor.p_miss;
        let along = rng.gen::<f64>();
        let range = if spurious {
            Some(along * truth_range.unwrap_or(max_range))
        } else if dropped {
            None
        } else {
            truth_range
        };

        let beam = match range {
            None => Beam {
                origin,
                angle,
                range: max_range,
                hit: false,
            },
            Some(r) => {
                let rho = sensor.error_radius * rng.gen::<f64>().sqrt();
                let phi = TAU * rng.gen::<f64>();
                let x = r * angle.cos() + rho * phi.cos();
                let y = r * angle.sin() + rho * phi.sin();
                let measured = x.hypot(y);
                if measured > 0.0 {
                    Beam {
                        origin,
                        angle: y.atan2(x),
                        range: measured.min(max_range),
                        hit: true,
                    }
                } else {
                    Beam {
                        origin,
                        angle,
                        range: f64::MIN_POSITIVE,
                        hit: true,
                    }
                }
            }
        };
        beams.push(beam);
    }
    Ok(beams)
}

/// Per-scan seed derived from a base seed, so scans can be simulated
/// independently and in any order.
pub fn scan_seed(base: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index);
    rng.next_u64()
}

/// Simulates one scan per pose, in parallel; scan `k` uses `scan_seed(seed, k)`.
pub fn simulate_scans(
    truth: &GroundTruthMap,
    poses: &[Pose2],
    sensor: &SensorModel,
    config: &SimulationConfig,
    seed: u64,
) -> Result<Vec<Vec<Beam>>> {
    let indexed: Vec<(usize, Pose2)> = poses.iter().copied().enumerate().collect();
    par::map(&indexed, |(k, pose)| {
        simulate_scan(truth, *pose, sensor, config, scan_seed(seed, *k as u64))
    })
    .into_iter()
    .collect()
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > std::f64::consts::PI {
        w - TAU
    } else {
        w
    }
}
