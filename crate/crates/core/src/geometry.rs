//! Planar points, poses and the regular grid tessellation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Distance from `self` to the closed segment `[a, b]`.
    pub fn distance_to_segment(&self, a: &Point2, b: &Point2) -> f64 {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return self.distance(a);
        }
        let t = (((self.x - a.x) * dx + (self.y - a.y) * dy) / len2).clamp(0.0, 1.0);
        self.distance(&Point2::new(a.x + t * dx, a.y + t * dy))
    }
}

/// Planar robot pose; `theta` in radians, counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Column/row address of a grid cell. Row 0 is the lowest `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub col: usize,
    pub row: usize,
}

impl CellIndex {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

/// A regular square tessellation of an axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    origin: Point2,
    resolution: f64,
    n_cols: usize,
    n_rows: usize,
}

impl GridGeometry {
    /// `origin` is the world position of the lower-left corner of cell (0, 0).
    pub fn new(origin: Point2, resolution: f64, n_cols: usize, n_rows: usize) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if n_cols == 0 || n_rows == 0 {
            return Err(Error::InvalidGeometry(format!(
                "grid must have at least one cell, got {n_cols}x{n_rows}"
            )));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(Error::InvalidGeometry("origin must be finite".into()));
        }
        Ok(Self {
            origin,
            resolution,
            n_cols,
            n_rows,
        })
    }

    /// Smallest grid of the given resolution anchored at `origin` that covers
    /// a `width` x `height` rectangle.
    pub fn covering(origin: Point2, width: f64, height: f64, resolution: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "extent must be positive, got {width}x{height}"
            )));
        }
        // Shave off rounding noise so 2.0 / 0.1 stays 20 cells.
        let cells = |len: f64| ((len / resolution) - 1e-9).ceil().max(1.0) as usize;
        Self::new(origin, resolution, cells(width), cells(height))
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn len(&self) -> usize {
        self.n_cols * self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }

    pub fn width(&self) -> f64 {
        self.n_cols as f64 * self.resolution
    }

    pub fn height(&self) -> f64 {
        self.n_rows as f64 * self.resolution
    }

    /// Half-open containment: the upper and right edges are outside.
    pub fn contains(&self, p: Point2) -> bool {
        let (gx, gy) = self.to_grid_units(p);
        gx >= 0.0 && gy >= 0.0 && gx < self.n_cols as f64 && gy < self.n_rows as f64
    }

    /// World point expressed in cell units relative to the origin.
    pub(crate) fn to_grid_units(self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.origin.x) / self.resolution,
            (p.y - self.origin.y) / self.resolution,
        )
    }

    pub fn cell_of(&self, p: Point2) -> Option<CellIndex> {
        let (gx, gy) = self.to_grid_units(p);
        if !(gx >= 0.0 && gy >= 0.0) {
            return None;
        }
        let (col, row) = (gx.floor() as usize, gy.floor() as usize);
        (col < self.n_cols && row < self.n_rows).then_some(CellIndex { col, row })
    }

    pub fn cell_center(&self, cell: CellIndex) -> Point2 {
        Point2::new(
            self.origin.x + (cell.col as f64 + 0.5) * self.resolution,
            self.origin.y + (cell.row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn in_bounds(&self, cell: CellIndex) -> bool {
        cell.col < self.n_cols && cell.row < self.n_rows
    }

    pub fn check(&self, cell: CellIndex) -> Result<()> {
        if self.in_bounds(cell) {
            Ok(())
        } else {
            Err(Error::CellOutOfBounds {
                col: cell.col,
                row: cell.row,
                n_cols: self.n_cols,
                n_rows: self.n_rows,
            })
        }
    }

    /// Row-major linear offset of `cell`.
    pub fn linear(&self, cell: CellIndex) -> usize {
        cell.row * self.n_cols + cell.col
    }

    pub fn cell_at(&self, linear: usize) -> CellIndex {
        CellIndex {
            col: linear % self.n_cols,
            row: linear / self.n_cols,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.len()).map(|i| self.cell_at(i))
    }

    /// The same extent cut into `k × k` children per cell.
    pub fn subdivide(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidGeometry("subdivision factor must be positive".into()));
        }
        Self::new(
            self.origin,
            self.resolution / k as f64,
            self.n_cols * k,
            self.n_rows * k,
        )
    }

    /// Coarse cell containing a child of [`subdivide`](Self::subdivide)`(k)`.
    pub fn parent(child: CellIndex, k: usize) -> CellIndex {
        CellIndex::new(child.col / k, child.row / k)
    }
}
