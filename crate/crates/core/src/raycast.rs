//! Exact segment traversal of the grid and error-region rasterization.

use crate::error::{Error, Result};
use crate::geometry::{CellIndex, GridGeometry, Point2};

/// Chords shorter than this (meters) are treated as grazing contacts.
const MIN_CHORD: f64 = 1e-12;

/// Cells crossed by the segment `origin -> endpoint`, in order, with the
/// length of the segment inside each cell.
///
/// Incremental grid walk (Amanatides & Woo) in cell units. The endpoint may lie
/// outside the grid, in which case the segment is clipped at the border.
/// Cells touched only at a corner or edge are skipped.
pub fn trace_beam(geometry: &GridGeometry, origin: Point2, endpoint: Point2) -> Result<Vec<(CellIndex, f64)>> {
    let start = geometry.cell_of(origin).ok_or(Error::OutsideGrid {
        x: origin.x,
        y: origin.y,
    })?;
    let (sx, sy) = geometry.to_grid_units(origin);
    let (ex, ey) = geometry.to_grid_units(endpoint);
    let (dx, dy) = (ex - sx, ey - sy);
    let length = origin.distance(&endpoint);
    if length == 0.0 {
        return Ok(Vec::new());
    }

    // Parameter at which the segment leaves the grid rectangle.
    let exit = |s: f64, d: f64, n: usize| -> f64 {
        if d > 0.0 {
            (n as f64 - s) / d
        } else if d < 0.0 {
            -s / d
        } else {
            f64::INFINITY
        }
    };
    let t_end = 1f64
        .min(exit(sx, dx, geometry.n_cols()))
        .min(exit(sy, dy, geometry.n_rows()));

    let axis = |s: f64, d: f64| -> (i64, f64, f64) {
        if d > 0.0 {
            (1, (s.floor() + 1.0 - s) / d, 1.0 / d)
        } else if d < 0.0 {
            (-1, (s - s.floor()) / -d, -1.0 / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (step_x, mut t_max_x, t_delta_x) = axis(sx, dx);
    let (step_y, mut t_max_y, t_delta_y) = axis(sy, dy);

    let (mut col, mut row) = (start.col as i64, start.row as i64);
    let (n_cols, n_rows) = (geometry.n_cols() as i64, geometry.n_rows() as i64);
    let mut t = 0.0;
    let mut out = Vec::new();
    while t < t_end {
        if col < 0 || row < 0 || col >= n_cols || row >= n_rows {
            break;
        }
        let t_next = t_max_x.min(t_max_y).min(t_end);
        let chord = (t_next - t) * length;
        if chord > MIN_CHORD {
            out.push((CellIndex::new(col as usize, row as usize), chord));
        }
        t = t_next;
        if t_max_x < t_max_y {
            col += step_x;
            t_max_x += t_delta_x;
        } else {
            row += step_y;
            t_max_y += t_delta_y;
        }
    }
    Ok(out)
}

/// Cells whose center lies within `radius` of `center`, plus the cell that
/// contains `center` itself. Cells outside the grid are dropped. Sorted
/// row-major.
pub fn error_region_cells(geometry: &GridGeometry, center: Point2, radius: f64) -> Vec<CellIndex> {
    let res = geometry.resolution();
    let (gx, gy) = geometry.to_grid_units(center);
    let r = radius.max(0.0) / res;
    let lo = |g: f64| (g - r - 0.5).floor().max(0.0);
    let hi = |g: f64, n: usize| (g + r).floor().min(n as f64 - 1.0);
    let (c0, c1) = (lo(gx), hi(gx, geometry.n_cols()));
    let (r0, r1) = (lo(gy), hi(gy, geometry.n_rows()));
    let home = geometry.cell_of(center);
    let mut cells = Vec::new();
    if c0 > c1 || r0 > r1 {
        return cells;
    }
    for row in r0 as usize..=r1 as usize {
        for col in c0 as usize..=c1 as usize {
            let cell = CellIndex::new(col, row);
            if home == Some(cell) || geometry.cell_center(cell).distance(&center) <= radius {
                cells.push(cell);
            }
        }
    }
    cells
}
