//! The Lambda-Field: per-cell hit/miss counts and the closed-form intensity
//! math built on them.
//!
//! Each cell stores how often it fell inside a beam's error region (`hits`)
//! and how often a beam crossed it freely (`misses`). The maximum-likelihood
//! intensity of a cell is `ln(1 + h/m) / e`, where `e` is the area of the
//! sensor error region; path collision probabilities follow from area-weighted
//! sums of intensities and therefore do not depend on the tessellation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{CellIndex, GridGeometry};
use crate::par;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

/// Default clamp for cells that were hit but never missed, in 1/m².
pub const DEFAULT_LAMBDA_MAX: f64 = 100.0;

/// Hit and miss tallies of one cell. Counts saturate at `u32::MAX`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellStats {
    pub hits: u32,
    pub misses: u32,
}

impl CellStats {
    pub const fn new(hits: u32, misses: u32) -> Self {
        Self { hits, misses }
    }

    pub fn total(&self) -> u64 {
        self.hits as u64 + self.misses as u64
    }

    pub fn is_observed(&self) -> bool {
        self.total() > 0
    }

    pub fn add_hit(&mut self) {
        self.hits = self.hits.saturating_add(1);
    }

    pub fn add_miss(&mut self) {
        self.misses = self.misses.saturating_add(1);
    }
}

/// Beam noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    /// Probability that a cell inside the error region is read as a hit.
    pub p_hit: f64,
    /// Probability that a free cell is read as a miss.
    pub p_miss: f64,
    /// Radius of the disk-shaped error region, in meters.
    pub error_radius: f64,
    pub max_range: f64,
}

impl SensorModel {
    pub fn new(p_hit: f64, p_miss: f64, error_radius: f64, max_range: f64) -> Result<Self> {
        let model = Self {
            p_hit,
            p_miss,
            error_radius,
            max_range,
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds a model from the error-region *area* instead of its radius.
    pub fn with_error_area(p_hit: f64, p_miss: f64, error_area: f64, max_range: f64) -> Result<Self> {
        if !(error_area > 0.0 && error_area.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "error area must be positive, got {error_area}"
            )));
        }
        Self::new(p_hit, p_miss, (error_area / PI).sqrt(), max_range)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if p > 0.0 && p <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (0, 1], got {p}")))
            }
        };
        prob("p_hit", self.p_hit)?;
        prob("p_miss", self.p_miss)?;
        if !(self.error_radius > 0.0 && self.error_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "error radius must be positive, got {}",
                self.error_radius
            )));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "max range must be positive, got {}",
                self.max_range
            )));
        }
        Ok(())
    }

    /// Area `e` of the error region, in m².
    pub fn error_area(&self) -> f64 {
        PI * self.error_radius * self.error_radius
    }
}

impl Default for SensorModel {
    /// Outdoor lidar defaults: `p_h = 0.99`, `p_m = 0.9999`, a 0.04 m² error disk
    /// and 30 m range.
    fn default() -> Self {
        Self {
            p_hit: 0.99,
            p_miss: 0.9999,
            error_radius: (0.04 / PI).sqrt(),
            max_range: 30.0,
        }
    }
}

/// Which per-cell intensity to use when integrating along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Estimator {
    #[default]
    Mle,
    Lower,
    Upper,
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Ok(Estimator::Mle),
            "lower" => Ok(Estimator::Lower),
            "upper" => Ok(Estimator::Upper),
            other => Err(Error::InvalidParameter(format!(
                "unknown estimator {other:?}, expected mle, lower or upper"
            ))),
        }
    }
}

/// Point estimate of a cell intensity. Unobserved cells report 0 with
/// `observed == false`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub lambda: f64,
    pub observed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Maximum-likelihood intensity of a cell.
pub fn lambda_mle(stats: CellStats, error_area: f64, lambda_max: f64) -> Estimate {
    let (h, m) = (stats.hits as f64, stats.misses as f64);
    let lambda = match (stats.hits, stats.misses) {
        (0, 0) => {
            return Estimate {
                lambda: 0.0,
                observed: false,
            }
        }
        (0, _) => 0.0,
        (_, 0) => lambda_max,
        _ => ((h / m).ln_1p() / error_area).min(lambda_max),
    };
    Estimate { lambda, observed: true }
}

/// Intensity implied by `count` hits out of `total` readings. A saturated
/// count maps to `lambda_max`.
pub fn lambda_from_count(count: f64, total: f64, error_area: f64, lambda_max: f64) -> Result<f64> {
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "total count must be positive, got {total}"
        )));
    }
    if !(count >= 0.0 && count <= total) {
        return Err(Error::CountOutOfRange { count, total });
    }
    if count >= total {
        return Ok(lambda_max);
    }
    // ln(K/(M-K) + 1) == -ln(1 - K/M)
    Ok((-(-count / total).ln_1p() / error_area).min(lambda_max))
}

/// 95% bounds from the Gaussian approximation of the hit count, whose mean is
/// `h·p_h + m·(1-p_m)` and variance `h·p_h(1-p_h) + m·p_m(1-p_m)`.
pub fn confidence_bounds(stats: CellStats, sensor: &SensorModel, lambda_max: f64) -> ConfidenceInterval {
    let level = 0.95;
    if !stats.is_observed() {
        return ConfidenceInterval {
            lower: 0.0,
            upper: lambda_max,
            level,
        };
    }
    let (h, m) = (stats.hits as f64, stats.misses as f64);
    let total = h + m;
    let (ph, pm) = (sensor.p_hit, sensor.p_miss);
    let mean = h * ph + m * (1.0 - pm);
    let sigma = (h * (1.0 - ph) * ph + m * (1.0 - pm) * pm).sqrt();
    let k_low = (mean - Z_95 * sigma).max(0.0);
    let k_high = (mean + Z_95 * sigma).min(total);
    let e = sensor.error_area();
    // Both counts lie in [0, M] by construction.
    let to_lambda = |k: f64| lambda_from_count(k, total, e, lambda_max).expect("count clamped to [0, M]");
    ConfidenceInterval {
        lower: to_lambda(k_low),
        upper: to_lambda(k_high),
        level,
    }
}

/// `Σ area_i · λ_i` over `(area, lambda)` pairs.
pub fn integrate(cells: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    cells.into_iter().map(|(area, lambda)| area * lambda).sum()
}

/// Probability of at least one collision given the integrated intensity.
pub fn collision_probability(integrated: f64) -> Result<f64> {
    if !(integrated >= 0.0) {
        return Err(Error::NegativeIntensity(integrated));
    }
    Ok(-(-integrated).exp_m1())
}

/// Intensities of one cell under every estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellLambda {
    pub mle: f64,
    pub lower: f64,
    pub upper: f64,
    pub observed: bool,
}

impl CellLambda {
    /// A known intensity with a degenerate interval.
    pub fn exact(lambda: f64) -> Self {
        Self {
            mle: lambda,
            lower: lambda,
            upper: lambda,
            observed: true,
        }
    }

    pub fn get(&self, estimator: Estimator) -> f64 {
        match estimator {
            Estimator::Mle => self.mle,
            Estimator::Lower => self.lower,
            Estimator::Upper => self.upper,
        }
    }
}

/// The map: a dense row-major grid of [`CellStats`].
///
/// Reads may happen from any number of threads. Updates take `&mut self`;
/// since estimates depend only on final counts, the order in which beams are
/// applied does not matter.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    geometry: GridGeometry,
    sensor: SensorModel,
    lambda_max: f64,
    cells: Vec<CellStats>,
}

impl LambdaGrid {
    pub fn new(geometry: GridGeometry, sensor: SensorModel, lambda_max: f64) -> Result<Self> {
        sensor.validate()?;
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda_max must be positive, got {lambda_max}"
            )));
        }
        Ok(Self {
            geometry,
            sensor,
            lambda_max,
            cells: vec![CellStats::default(); geometry.len()],
        })
    }

    pub(crate) fn from_parts(
        geometry: GridGeometry,
        sensor: SensorModel,
        lambda_max: f64,
        cells: Vec<CellStats>,
    ) -> Result<Self> {
        let mut grid = Self::new(geometry, sensor, lambda_max)?;
        if cells.len() != grid.cells.len() {
            return Err(Error::InvalidGeometry(format!(
                "expected {} cells, got {}",
                grid.cells.len(),
                cells.len()
            )));
        }
        grid.cells = cells;
        Ok(grid)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn sensor(&self) -> &SensorModel {
        &self.sensor
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn stats(&self, cell: CellIndex) -> Result<CellStats> {
        self.geometry.check(cell)?;
        Ok(self.cells[self.geometry.linear(cell)])
    }

    pub fn set_stats(&mut self, cell: CellIndex, stats: CellStats) -> Result<()> {
        self.geometry.check(cell)?;
        let i = self.geometry.linear(cell);
        self.cells[i] = stats;
        Ok(())
    }

    pub fn cell_stats(&self) -> &[CellStats] {
        &self.cells
    }

    pub(crate) fn stats_mut(&mut self, cell: CellIndex) -> &mut CellStats {
        let i = self.geometry.linear(cell);
        &mut self.cells[i]
    }

    pub fn estimate(&self, cell: CellIndex) -> Result<Estimate> {
        Ok(lambda_mle(self.stats(cell)?, self.sensor.error_area(), self.lambda_max))
    }

    pub fn lambda(&self, cell: CellIndex) -> Result<f64> {
        Ok(self.estimate(cell)?.lambda)
    }

    pub fn bounds(&self, cell: CellIndex) -> Result<ConfidenceInterval> {
        Ok(confidence_bounds(self.stats(cell)?, &self.sensor, self.lambda_max))
    }

    pub fn cell_lambda(&self, cell: CellIndex) -> Result<CellLambda> {
        let stats = self.stats(cell)?;
        Ok(self.lambda_of(stats))
    }

    fn lambda_of(&self, stats: CellStats) -> CellLambda {
        let est = lambda_mle(stats, self.sensor.error_area(), self.lambda_max);
        let ci = confidence_bounds(stats, &self.sensor, self.lambda_max);
        CellLambda {
            mle: est.lambda,
            lower: ci.lower,
            upper: ci.upper,
            observed: est.observed,
        }
    }

    /// Estimates for every cell in row-major order.
    pub fn lambdas(&self) -> Vec<CellLambda> {
        par::map(&self.cells, |s| self.lambda_of(*s))
    }

    /// Integrated intensity over `(cell, crossed area)` pairs.
    pub fn integrated_lambda(&self, cells: &[(CellIndex, f64)], estimator: Estimator) -> Result<f64> {
        let mut total = 0.0;
        for &(cell, area) in cells {
            total += area * self.cell_lambda(cell)?.get(estimator);
        }
        Ok(total)
    }

    /// Finer grid whose children inherit their parent's counts, and with them
    /// its intensity estimate.
    pub fn subdivide(&self, k: usize) -> Result<Self> {
        let fine = self.geometry.subdivide(k)?;
        let cells = fine
            .cells()
            .map(|c| self.cells[self.geometry.linear(GridGeometry::parent(c, k))])
            .collect();
        Self::from_parts(fine, self.sensor, self.lambda_max, cells)
    }

    /// Total number of hit and miss readings stored in the grid.
    pub fn count_mass(&self) -> u64 {
        self.cells.iter().map(CellStats::total).sum()
    }
}
