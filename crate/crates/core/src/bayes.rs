//! Classical log-odds occupancy grid, kept as a comparison baseline.
//!
//! Its natural path collision probability, `1 - Π (1 - p_i)` over crossed
//! cells, depends on how finely the map is tessellated.

use crate::error::{Error, Result};
use crate::geometry::{CellIndex, GridGeometry};
use crate::raycast::trace_beam;
use crate::sensor::Beam;

/// Beam-endpoint inverse sensor model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseSensorModel {
    /// Occupancy probability assigned to the endpoint cell of a return.
    pub p_occupied_on_hit: f64,
    /// Occupancy probability assigned to a cell a beam crossed freely.
    pub p_occupied_on_miss: f64,
    /// Log-odds clamp, symmetric.
    pub log_odds_max: f64,
}

impl Default for InverseSensorModel {
    fn default() -> Self {
        Self {
            p_occupied_on_hit: 0.7,
            p_occupied_on_miss: 0.4,
            log_odds_max: 10.0,
        }
    }
}

impl InverseSensorModel {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_occupied_on_hit", self.p_occupied_on_hit),
            ("p_occupied_on_miss", self.p_occupied_on_miss),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {p}")));
            }
        }
        if !(self.log_odds_max > 0.0 && self.log_odds_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "log-odds clamp must be positive, got {}",
                self.log_odds_max
            )));
        }
        Ok(())
    }

    fn hit_increment(&self) -> f64 {
        logit(self.p_occupied_on_hit)
    }

    fn miss_increment(&self) -> f64 {
        logit(self.p_occupied_on_miss)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn sigmoid(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesGrid {
    geometry: GridGeometry,
    model: InverseSensorModel,
    log_odds: Vec<f64>,
}

impl BayesGrid {
    /// All cells start at the 0.5 prior.
    pub fn new(geometry: GridGeometry, model: InverseSensorModel) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            geometry,
            model,
            log_odds: vec![0.0; geometry.len()],
        })
    }

    pub(crate) fn from_parts(geometry: GridGeometry, model: InverseSensorModel, log_odds: Vec<f64>) -> Result<Self> {
        let mut grid = Self::new(geometry, model)?;
        if log_odds.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "expected {} cells, got {}",
                geometry.len(),
                log_odds.len()
            )));
        }
        if log_odds.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter("log-odds must be finite".into()));
        }
        let max = model.log_odds_max;
        grid.log_odds = log_odds.into_iter().map(|l| l.clamp(-max, max)).collect();
        Ok(grid)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn model(&self) -> &InverseSensorModel {
        &self.model
    }

    pub fn log_odds(&self, cell: CellIndex) -> Result<f64> {
        self.geometry.check(cell)?;
        Ok(self.log_odds[self.geometry.linear(cell)])
    }

    pub fn log_odds_values(&self) -> &[f64] {
        &self.log_odds
    }

    pub fn probability(&self, cell: CellIndex) -> Result<f64> {
        Ok(sigmoid(self.log_odds(cell)?))
    }

    pub fn set_probability(&mut self, cell: CellIndex, p: f64) -> Result<()> {
        self.geometry.check(cell)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "occupancy probability must lie in (0, 1), got {p}"
            )));
        }
        let i = self.geometry.linear(cell);
        self.log_odds[i] = logit(p).clamp(-self.model.log_odds_max, self.model.log_odds_max);
        Ok(())
    }

    /// Finer grid whose children inherit their parent's occupancy.
    pub fn subdivide(&self, k: usize) -> Result<Self> {
        let fine = self.geometry.subdivide(k)?;
        let log_odds = fine
            .cells()
            .map(|c| self.log_odds[self.geometry.linear(GridGeometry::parent(c, k))])
            .collect();
        Self::from_parts(fine, self.model, log_odds)
    }

    fn bump(&mut self, cell: CellIndex, delta: f64) {
        let i = self.geometry.linear(cell);
        let max = self.model.log_odds_max;
        self.log_odds[i] = (self.log_odds[i] + delta).clamp(-max, max);
    }

    /// Log-odds update: the endpoint cell of a return moves toward occupied,
    /// every other crossed cell toward free.
    pub fn update(&mut self, beam: &Beam) -> Result<()> {
        let end = beam.endpoint();
        let crossed = trace_beam(&self.geometry, beam.origin, end)?;
        let endpoint_cell = if beam.hit { self.geometry.cell_of(end) } else { None };
        let (hit, miss) = (self.model.hit_increment(), self.model.miss_increment());
        for (cell, _) in crossed {
            if Some(cell) == endpoint_cell {
                break;
            }
            self.bump(cell, miss);
        }
        if let Some(cell) = endpoint_cell {
            self.bump(cell, hit);
        }
        Ok(())
    }

    pub fn apply_scan(&mut self, beams: &[Beam]) -> Result<()> {
        beams.iter().try_for_each(|b| self.update(b))
    }

    /// Probability of hitting at least one crossed cell, treating cells as
    /// independent.
    pub fn naive_path_probability(&self, cells: impl IntoIterator<Item = CellIndex>) -> Result<f64> {
        let probs = cells
            .into_iter()
            .map(|c| self.probability(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(naive_path_probability(&probs))
    }
}

/// `1 - Π (1 - p_i)`.
pub fn naive_path_probability(probabilities: &[f64]) -> f64 {
    1.0 - probabilities.iter().map(|p| 1.0 - p).product::<f64>()
}
