//! Swept-path crossings and the collision density, probability and expected
//! risk along them.
//!
//! A crossing is the ordered list of cells a robot footprint of width `w`
//! sweeps along a path, each with the area it sweeps there. With `A(i)` the
//! area swept before cell `i` and `L(i) = Σ_{j<i} a_j λ_j`, the density of the
//! first collision at swept area `a` inside cell `n` is
//! `f(a) = λ_n exp(-L(n) - (a - A(n)) λ_n)`, and the expected value of a risk
//! function that is constant inside each cell is
//! `Σ_i r(A(i)) exp(-L(i)) (1 - exp(-a_i λ_i))`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::field::{collision_probability, CellLambda, Estimator, LambdaGrid};
use crate::geometry::{CellIndex, GridGeometry, Point2, Pose2};

/// Swept slivers below this area (m²) are numerical noise from clipping.
const MIN_AREA: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotShape {
    pub width: f64,
    pub length: f64,
    /// kg
    pub mass: f64,
}

impl RobotShape {
    pub fn new(width: f64, length: f64, mass: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "robot width must be positive, got {width}"
            )));
        }
        if !(length >= 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "robot length must be nonnegative, got {length}"
            )));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "robot mass must be positive, got {mass}"
            )));
        }
        Ok(Self { width, length, mass })
    }
}

/// Speed as a function of arc length: piecewise linear between breakpoints,
/// constant beyond the first and last.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile {
    points: Vec<(f64, f64)>,
}

impl VelocityProfile {
    pub fn constant(speed: f64) -> Result<Self> {
        Self::from_points(vec![(0.0, speed)])
    }

    /// `points` are `(arc length m, speed m/s)` with strictly increasing arc length.
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter(
                "velocity profile needs at least one point".into(),
            ));
        }
        if points
            .iter()
            .any(|&(s, v)| !s.is_finite() || !(v >= 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidParameter(
                "velocity profile speeds must be finite and nonnegative".into(),
            ));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter(
                "velocity profile abscissae must increase".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn speed_at(&self, s: f64) -> f64 {
        let pts = &self.points;
        let i = pts.partition_point(|&(x, _)| x <= s);
        if i == 0 {
            return pts[0].1;
        }
        if i == pts.len() {
            return pts[pts.len() - 1].1;
        }
        let ((s0, v0), (s1, v1)) = (pts[i - 1], pts[i]);
        v0 + (v1 - v0) * (s - s0) / (s1 - s0)
    }

    pub fn max_speed(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(0.0, f64::max)
    }
}

/// Momentum lost if the first collision happens after sweeping area `a`:
/// `m_R · v(a / w)`, in kg·m/s.
pub fn momentum_risk(shape: &RobotShape, profile: &VelocityProfile) -> impl Fn(f64) -> f64 + Clone + Send + Sync {
    let (mass, width) = (shape.mass, shape.width);
    let profile = profile.clone();
    move |a| mass * profile.speed_at(a / width)
}

/// A cell and the footprint area swept inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweptCell {
    pub cell: CellIndex,
    pub area: f64,
}

/// Cells swept by a footprint of `width` following the polyline through
/// `poses`, in order of first contact.
///
/// Each polyline segment sweeps a `width`-wide rectangle centered on it. The
/// rectangle is cut into steps of at most half a cell, and every step is
/// clipped exactly against the cells it overlaps, so the total area equals
/// `width × path length` and a refined grid apportions the same areas.
/// A cell re-entered later keeps its first position; its area accumulates.
pub fn swept_cells(geometry: &GridGeometry, poses: &[Pose2], width: f64) -> Result<Vec<SweptCell>> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sweep width must be positive, got {width}"
        )));
    }
    let res = geometry.resolution();
    let (x0, y0) = (geometry.origin().x, geometry.origin().y);
    let (x1, y1) = (x0 + geometry.width(), y0 + geometry.height());
    let slack = 1e-9 * res;
    let inside = |p: Point2| p.x >= x0 - slack && p.x <= x1 + slack && p.y >= y0 - slack && p.y <= y1 + slack;

    let mut order: Vec<SweptCell> = Vec::new();
    let mut slot: HashMap<CellIndex, usize> = HashMap::new();
    for pair in poses.windows(2) {
        let (p, q) = (pair[0].position(), pair[1].position());
        let len = p.distance(&q);
        if len == 0.0 {
            continue;
        }
        let (ux, uy) = ((q.x - p.x) / len, (q.y - p.y) / len);
        let (nx, ny) = (-uy * width * 0.5, ux * width * 0.5);
        let steps = (len / (0.5 * res)).ceil().max(1.0) as usize;
        for k in 0..steps {
            let t0 = len * k as f64 / steps as f64;
            let t1 = len * (k + 1) as f64 / steps as f64;
            let a = Point2::new(p.x + ux * t0, p.y + uy * t0);
            let b = Point2::new(p.x + ux * t1, p.y + uy * t1);
            let quad = [
                Point2::new(a.x + nx, a.y + ny),
                Point2::new(a.x - nx, a.y - ny),
                Point2::new(b.x - nx, b.y - ny),
                Point2::new(b.x + nx, b.y + ny),
            ];
            if let Some(out) = quad.iter().find(|c| !inside(**c)) {
                return Err(Error::OutsideGrid { x: out.x, y: out.y });
            }
            rasterize_quad(geometry, &quad, |cell, area| {
                let i = *slot.entry(cell).or_insert_with(|| {
                    order.push(SweptCell { cell, area: 0.0 });
                    order.len() - 1
                });
                order[i].area += area;
            });
        }
    }
    order.retain(|c| c.area > MIN_AREA);
    Ok(order)
}

/// Calls `sink(cell, overlap area)` for every cell overlapping the convex
/// quadrilateral, in row-major order.
fn rasterize_quad(geometry: &GridGeometry, quad: &[Point2; 4], mut sink: impl FnMut(CellIndex, f64)) {
    let res = geometry.resolution();
    let o = geometry.origin();
    let (min_x, max_x) = quad.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.x), hi.max(p.x))
    });
    let (min_y, max_y) = quad.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.y), hi.max(p.y))
    });
    let span = |lo: f64, hi: f64, origin: f64, n: usize| {
        let a = ((lo - origin) / res).floor().max(0.0) as usize;
        let b = (((hi - origin) / res).floor().max(0.0) as usize).min(n - 1);
        (a, b)
    };
    let (c0, c1) = span(min_x, max_x, o.x, geometry.n_cols());
    let (r0, r1) = span(min_y, max_y, o.y, geometry.n_rows());
    for row in r0..=r1 {
        for col in c0..=c1 {
            let bx = o.x + col as f64 * res;
            let by = o.y + row as f64 * res;
            let area = clipped_area(quad, bx, bx + res, by, by + res);
            if area > 0.0 {
                sink(CellIndex::new(col, row), area);
            }
        }
    }
}

/// Area of a convex polygon intersected with an axis-aligned box
/// (Sutherland-Hodgman clipping followed by the shoelace formula).
fn clipped_area(poly: &[Point2], x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let mut pts: Vec<Point2> = poly.to_vec();
    // (axis, bound, keep_greater)
    for (axis_x, bound, keep_ge) in [
        (true, x0, true),
        (true, x1, false),
        (false, y0, true),
        (false, y1, false),
    ] {
        if pts.is_empty() {
            return 0.0;
        }
        let coord = |p: &Point2| if axis_x { p.x } else { p.y };
        let keep = |p: &Point2| if keep_ge { coord(p) >= bound } else { coord(p) <= bound };
        let mut next = Vec::with_capacity(pts.len() + 2);
        for i in 0..pts.len() {
            let cur = pts[i];
            let prev = pts[(i + pts.len() - 1) % pts.len()];
            let (kc, kp) = (keep(&cur), keep(&prev));
            if kc != kp {
                let t = (bound - coord(&prev)) / (coord(&cur) - coord(&prev));
                let mut p = Point2::new(prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y));
                if axis_x {
                    p.x = bound;
                } else {
                    p.y = bound;
                }
                next.push(p);
            }
            if kc {
                next.push(cur);
            }
        }
        pts = next;
    }
    if pts.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..pts.len())
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    0.5 * twice.abs()
}

/// One entry of a [`PathCrossing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossedCell {
    pub cell: CellIndex,
    /// Swept area inside the cell, m².
    pub area: f64,
    pub lambda: CellLambda,
}

/// Ordered cells crossed by a swept path, with a snapshot of their
/// intensities. Areas are positive, so cumulative area strictly increases.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathCrossing {
    cells: Vec<CrossedCell>,
    cumulative: Vec<f64>,
}

impl PathCrossing {
    pub fn new(cells: Vec<CrossedCell>) -> Result<Self> {
        if let Some(bad) = cells.iter().find(|c| !(c.area > 0.0 && c.area.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "crossed areas must be positive, got {}",
                bad.area
            )));
        }
        if let Some(bad) = cells
            .iter()
            .find(|c| !(c.lambda.lower >= 0.0 && c.lambda.mle >= 0.0 && c.lambda.upper >= 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "intensities must be nonnegative, got {:?}",
                bad.lambda
            )));
        }
        let mut cumulative = Vec::with_capacity(cells.len() + 1);
        let mut acc = 0.0;
        cumulative.push(acc);
        for c in &cells {
            acc += c.area;
            cumulative.push(acc);
        }
        Ok(Self { cells, cumulative })
    }

    /// Crossing from `(area, λ)` pairs with exact intensities; cell indices
    /// are positional placeholders.
    pub fn from_areas(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .enumerate()
                .map(|(i, &(area, lambda))| CrossedCell {
                    cell: CellIndex::new(i, 0),
                    area,
                    lambda: CellLambda::exact(lambda),
                })
                .collect(),
        )
    }

    /// Snapshots the grid's estimates for the swept cells.
    pub fn from_grid(grid: &LambdaGrid, swept: &[SweptCell]) -> Result<Self> {
        let cells = swept
            .iter()
            .map(|s| {
                Ok(CrossedCell {
                    cell: s.cell,
                    area: s.area,
                    lambda: grid.cell_lambda(s.cell)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cells)
    }

    /// Assigns intensities by cell through `lambda_of`.
    pub fn with_lambdas(swept: &[SweptCell], lambda_of: impl Fn(CellIndex) -> CellLambda) -> Result<Self> {
        Self::new(
            swept
                .iter()
                .map(|s| CrossedCell {
                    cell: s.cell,
                    area: s.area,
                    lambda: lambda_of(s.cell),
                })
                .collect(),
        )
    }

    pub fn cells(&self) -> &[CrossedCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Area swept before entering cell `i`; `i == len()` gives the total.
    pub fn cumulative_area(&self, i: usize) -> f64 {
        self.cumulative[i]
    }

    pub fn total_area(&self) -> f64 {
        self.cumulative[self.cells.len()]
    }

    pub fn integrated(&self, estimator: Estimator) -> f64 {
        self.cells.iter().map(|c| c.area * c.lambda.get(estimator)).sum()
    }

    /// Integrated intensity before each cell, plus the total at the end.
    fn prefix_intensity(&self, estimator: Estimator) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.cells.len() + 1);
        out.push(0.0);
        for c in &self.cells {
            acc += c.area * c.lambda.get(estimator);
            out.push(acc);
        }
        out
    }

    fn locate(&self, a: f64) -> Result<usize> {
        let total = self.total_area();
        if !(a >= 0.0 && a <= total) {
            return Err(Error::AreaOutOfRange { area: a, total });
        }
        Ok((self.cumulative.partition_point(|&c| c <= a) - 1).min(self.cells.len().saturating_sub(1)))
    }

    /// Exposure `Λ(a)` after sweeping area `a`.
    fn exposure(&self, a: f64, estimator: Estimator) -> Result<(usize, f64)> {
        let n = self.locate(a)?;
        if self.cells.is_empty() {
            return Ok((0, 0.0));
        }
        let before: f64 = self.cells[..n].iter().map(|c| c.area * c.lambda.get(estimator)).sum();
        Ok((
            n,
            before + (a - self.cumulative[n]) * self.cells[n].lambda.get(estimator),
        ))
    }
}

/// Density of the first collision at swept area `a`, in 1/m².
pub fn collision_pdf(crossing: &PathCrossing, a: f64, estimator: Estimator) -> Result<f64> {
    let (n, exposure) = crossing.exposure(a, estimator)?;
    if crossing.is_empty() {
        return Ok(0.0);
    }
    Ok(crossing.cells[n].lambda.get(estimator) * (-exposure).exp())
}

/// Probability that the first collision happens within swept area `a`.
pub fn collision_cdf(crossing: &PathCrossing, a: f64, estimator: Estimator) -> Result<f64> {
    let (_, exposure) = crossing.exposure(a, estimator)?;
    Ok(-(-exposure).exp_m1())
}

pub fn path_collision_probability(crossing: &PathCrossing, estimator: Estimator) -> f64 {
    collision_probability(crossing.integrated(estimator)).expect("intensities are nonnegative")
}

/// Expected value of `risk` at the first collision, taking `risk` constant
/// inside each cell at its entry value `risk(A(i))`.
pub fn expected_risk(crossing: &PathCrossing, risk: impl Fn(f64) -> f64, estimator: Estimator) -> f64 {
    let prefix = crossing.prefix_intensity(estimator);
    crossing
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let hit_here = -(-(c.area * c.lambda.get(estimator))).exp_m1();
            risk(crossing.cumulative[i]) * (-prefix[i]).exp() * hit_here
        })
        .sum()
}

/// One row of a per-cell risk report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskRow {
    pub cell: CellIndex,
    /// Area swept before the cell.
    pub cum_area: f64,
    pub lambda: f64,
    /// Density at the cell entry.
    pub pdf: f64,
    /// Collision probability once the cell has been crossed.
    pub cdf: f64,
    /// This cell's term of the expected risk.
    pub partial_risk: f64,
}

pub fn risk_report(crossing: &PathCrossing, risk: impl Fn(f64) -> f64, estimator: Estimator) -> Vec<RiskRow> {
    let prefix = crossing.prefix_intensity(estimator);
    crossing
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let lambda = c.lambda.get(estimator);
            let survive = (-prefix[i]).exp();
            RiskRow {
                cell: c.cell,
                cum_area: crossing.cumulative[i],
                lambda,
                pdf: lambda * survive,
                cdf: -(-prefix[i + 1]).exp_m1(),
                partial_risk: risk(crossing.cumulative[i]) * survive * -(-(c.area * lambda)).exp_m1(),
            }
        })
        .collect()
}

impl LambdaGrid {
    /// Swept crossing of `poses` for a robot of the given shape, with this
    /// grid's current estimates.
    pub fn crossing(&self, poses: &[Pose2], shape: &RobotShape) -> Result<PathCrossing> {
        PathCrossing::from_grid(self, &swept_cells(self.geometry(), poses, shape.width)?)
    }
}
