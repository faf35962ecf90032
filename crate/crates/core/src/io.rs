//! File formats: grid dumps, CSV exports, PGM images, scan logs, paths and
//! reports.
//!
//! Dumps are line-oriented text with a versioned header. Floats are written in
//! shortest round-trip form, so a dump reloads bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bayes::{sigmoid, BayesGrid, InverseSensorModel};
use crate::error::{Error, Result};
use crate::field::{CellStats, LambdaGrid, SensorModel};
use crate::geometry::{CellIndex, GridGeometry, Point2, Pose2};
use crate::path::RiskRow;
use crate::sensor::{Beam, GroundTruthMap};

const LAMBDA_MAGIC: &str = "LAMBDA-FIELD";
const BAYES_MAGIC: &str = "BAYES-GRID";
const VERSION: u32 = 1;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn write_geometry(w: &mut impl Write, g: &GridGeometry) -> Result<()> {
    writeln!(w, "origin {} {}", g.origin().x, g.origin().y)?;
    writeln!(w, "resolution {}", g.resolution())?;
    writeln!(w, "size {} {}", g.n_cols(), g.n_rows())?;
    Ok(())
}

/// Numbered, trimmed, non-empty lines.
struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(r: R) -> Self {
        Self {
            inner: r.lines(),
            line: 0,
        }
    }

    fn next_line(&mut self) -> Result<Option<String>> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            let t = l.trim();
            if !t.is_empty() {
                return Ok(Some(t.to_string()));
            }
        }
        Ok(None)
    }

    fn expect_line(&mut self) -> Result<String> {
        self.next_line()?
            .ok_or_else(|| Error::parse(self.line + 1, "unexpected end of input"))
    }

    /// Values following `key` on the next line.
    fn field(&mut self, key: &str, n: usize) -> Result<Vec<String>> {
        let l = self.expect_line()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::parse(self.line, format!("expected `{key}`")));
        }
        let values: Vec<String> = parts.map(str::to_string).collect();
        if values.len() != n {
            return Err(Error::parse(
                self.line,
                format!("`{key}` takes {n} values, got {}", values.len()),
            ));
        }
        Ok(values)
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| Error::parse(self.line, format!("not a number: `{s}`")))
    }

    fn header(&mut self, magic: &str) -> Result<()> {
        let l = self.expect_line()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(magic) {
            return Err(Error::parse(self.line, format!("missing `{magic}` header")));
        }
        let version: u32 = self.number(parts.next().unwrap_or(""))?;
        if version != VERSION {
            return Err(Error::parse(self.line, format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn geometry(&mut self) -> Result<GridGeometry> {
        let o = self.field("origin", 2)?;
        let origin = Point2::new(self.number(&o[0])?, self.number(&o[1])?);
        let r = self.field("resolution", 1)?;
        let resolution = self.number(&r[0])?;
        let s = self.field("size", 2)?;
        let (cols, rows) = (self.number(&s[0])?, self.number(&s[1])?);
        GridGeometry::new(origin, resolution, cols, rows)
    }
}

/// Writes `LAMBDA-FIELD 1`: geometry, `lambda_max`, sensor and then one
/// `hits misses` line per cell in row-major order.
pub fn write_lambda_dump(grid: &LambdaGrid, mut w: impl Write) -> Result<()> {
    writeln!(w, "{LAMBDA_MAGIC} {VERSION}")?;
    write_geometry(&mut w, grid.geometry())?;
    writeln!(w, "lambda_max {}", grid.lambda_max())?;
    let s = grid.sensor();
    writeln!(w, "sensor {} {} {} {}", s.p_hit, s.p_miss, s.error_radius, s.max_range)?;
    writeln!(w, "cells")?;
    for c in grid.cell_stats() {
        writeln!(w, "{} {}", c.hits, c.misses)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_lambda_dump(r: impl BufRead) -> Result<LambdaGrid> {
    let mut lines = Lines::new(r);
    lines.header(LAMBDA_MAGIC)?;
    let geometry = lines.geometry()?;
    let lm = lines.field("lambda_max", 1)?;
    let lambda_max = lines.number(&lm[0])?;
    let s = lines.field("sensor", 4)?;
    let sensor = SensorModel::new(
        lines.number(&s[0])?,
        lines.number(&s[1])?,
        lines.number(&s[2])?,
        lines.number(&s[3])?,
    )?;
    lines.field("cells", 0)?;
    let mut cells = Vec::with_capacity(geometry.len());
    while let Some(l) = lines.next_line()? {
        let mut parts = l.split_whitespace();
        let (Some(h), Some(m), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(lines.line, "expected `hits misses`"));
        };
        cells.push(CellStats::new(lines.number(h)?, lines.number(m)?));
    }
    LambdaGrid::from_parts(geometry, sensor, lambda_max, cells)
}

pub fn save_lambda_dump(grid: &LambdaGrid, path: impl AsRef<Path>) -> Result<()> {
    write_lambda_dump(grid, create(path.as_ref())?)
}

pub fn load_lambda_dump(path: impl AsRef<Path>) -> Result<LambdaGrid> {
    read_lambda_dump(open(path.as_ref())?)
}

/// Writes `BAYES-GRID 1`: geometry, inverse sensor model and one log-odds
/// value per cell in row-major order.
pub fn write_bayes_dump(grid: &BayesGrid, mut w: impl Write) -> Result<()> {
    writeln!(w, "{BAYES_MAGIC} {VERSION}")?;
    write_geometry(&mut w, grid.geometry())?;
    let m = grid.model();
    writeln!(
        w,
        "model {} {} {}",
        m.p_occupied_on_hit, m.p_occupied_on_miss, m.log_odds_max
    )?;
    writeln!(w, "cells")?;
    for l in grid.log_odds_values() {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bayes_dump(r: impl BufRead) -> Result<BayesGrid> {
    let mut lines = Lines::new(r);
    lines.header(BAYES_MAGIC)?;
    let geometry = lines.geometry()?;
    let m = lines.field("model", 3)?;
    let model = InverseSensorModel {
        p_occupied_on_hit: lines.number(&m[0])?,
        p_occupied_on_miss: lines.number(&m[1])?,
        log_odds_max: lines.number(&m[2])?,
    };
    lines.field("cells", 0)?;
    let mut log_odds = Vec::with_capacity(geometry.len());
    while let Some(l) = lines.next_line()? {
        log_odds.push(lines.number(&l)?);
    }
    BayesGrid::from_parts(geometry, model, log_odds)
}

pub fn save_bayes_dump(grid: &BayesGrid, path: impl AsRef<Path>) -> Result<()> {
    write_bayes_dump(grid, create(path.as_ref())?)
}

pub fn load_bayes_dump(path: impl AsRef<Path>) -> Result<BayesGrid> {
    read_bayes_dump(open(path.as_ref())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaCellRow {
    pub col: usize,
    pub row: usize,
    pub h: u32,
    pub m: u32,
    pub lambda: f64,
    pub lambda_low: f64,
    pub lambda_high: f64,
}

pub fn write_lambda_csv(grid: &LambdaGrid, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let lambdas = grid.lambdas();
    for (i, (stats, l)) in grid.cell_stats().iter().zip(&lambdas).enumerate() {
        let cell = grid.geometry().cell_at(i);
        out.serialize(LambdaCellRow {
            col: cell.col,
            row: cell.row,
            h: stats.hits,
            m: stats.misses,
            lambda: l.mle,
            lambda_low: l.lower,
            lambda_high: l.upper,
        })?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesCellRow {
    pub col: usize,
    pub row: usize,
    pub log_odds: f64,
    pub p_occ: f64,
}

pub fn write_bayes_csv(grid: &BayesGrid, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (i, &l) in grid.log_odds_values().iter().enumerate() {
        let cell = grid.geometry().cell_at(i);
        out.serialize(BayesCellRow {
            col: cell.col,
            row: cell.row,
            log_odds: l,
            p_occ: sigmoid(l),
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Binary 16-bit PGM of `value / scale`, saturated at 65535. The top image row
/// is the highest grid row. The scale is recorded as a `# lambda_scale`
/// comment so pixels read back as `pixel · scale`.
pub fn write_pgm16(geometry: &GridGeometry, values: &[f64], scale: f64, mut w: impl Write) -> Result<()> {
    if values.len() != geometry.len() {
        return Err(Error::InvalidGeometry(format!(
            "expected {} values, got {}",
            geometry.len(),
            values.len()
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    let (cols, rows) = (geometry.n_cols(), geometry.n_rows());
    write!(w, "P5\n# lambda_scale {scale}\n{cols} {rows}\n65535\n")?;
    let mut bytes = Vec::with_capacity(2 * values.len());
    for row in (0..rows).rev() {
        for col in 0..cols {
            let v = values[geometry.linear(CellIndex::new(col, row))];
            let px = (v / scale).round().clamp(0.0, 65535.0) as u16;
            bytes.extend_from_slice(&px.to_be_bytes());
        }
    }
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// 16-bit rendering of the MLE intensity, full scale at `lambda_max`.
pub fn write_lambda_pgm(grid: &LambdaGrid, w: impl Write) -> Result<()> {
    let values: Vec<f64> = grid.lambdas().iter().map(|l| l.mle).collect();
    write_pgm16(grid.geometry(), &values, grid.lambda_max() / 65535.0, w)
}

/// 16-bit rendering of occupancy probability, full scale at 1.
pub fn write_bayes_pgm(grid: &BayesGrid, w: impl Write) -> Result<()> {
    let values: Vec<f64> = grid.log_odds_values().iter().map(|&l| sigmoid(l)).collect();
    write_pgm16(grid.geometry(), &values, 1.0 / 65535.0, w)
}

/// Header of a ground-truth PGM.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PgmMapInfo {
    pub lambda_scale: Option<f64>,
    pub resolution: Option<f64>,
    pub origin: Option<Point2>,
}

fn pgm_token(bytes: &[u8], pos: &mut usize, info: &mut PgmMapInfo) -> Result<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            let start = *pos + 1;
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            let comment = String::from_utf8_lossy(&bytes[start..*pos]).into_owned();
            let mut parts = comment.split_whitespace();
            let nums =
                |it: std::str::SplitWhitespace| it.map(str::parse::<f64>).collect::<std::result::Result<Vec<_>, _>>();
            match (parts.next(), nums(parts)) {
                (Some("lambda_scale"), Ok(v)) if v.len() == 1 => info.lambda_scale = Some(v[0]),
                (Some("resolution"), Ok(v)) if v.len() == 1 => info.resolution = Some(v[0]),
                (Some("origin"), Ok(v)) if v.len() == 2 => info.origin = Some(Point2::new(v[0], v[1])),
                _ => {}
            }
            continue;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::parse(0, "truncated PGM header"));
        }
        return Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned());
    }
}

/// Loads a ground-truth map from an 8-bit PGM (binary `P5` or plain `P2`).
///
/// Pixels map to `λ* = pixel · lambda_scale`; the top image row is the highest
/// grid row. `# lambda_scale s`, `# resolution r` and `# origin x y` comments
/// configure the map. `resolution` passed here overrides the header; the
/// origin defaults to (0, 0).
pub fn read_truth_pgm(mut r: impl Read, resolution: Option<f64>) -> Result<GroundTruthMap> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut info = PgmMapInfo::default();
    let mut pos = 0;
    let magic = pgm_token(&bytes, &mut pos, &mut info)?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => return Err(Error::parse(1, format!("not an 8-bit PGM: `{other}`"))),
    };
    let mut number = |what: &str| -> Result<usize> {
        let t = pgm_token(&bytes, &mut pos, &mut info)?;
        t.parse().map_err(|_| Error::parse(0, format!("bad PGM {what}: `{t}`")))
    };
    let cols = number("width")?;
    let rows = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::parse(0, format!("maxval {maxval} is not 8-bit")));
    }
    let mut pixels = Vec::with_capacity(cols * rows);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = pos + 1;
        let end = start + cols * rows;
        if end > bytes.len() {
            return Err(Error::parse(0, "truncated PGM raster"));
        }
        pixels.extend(bytes[start..end].iter().map(|&b| b as f64));
    } else {
        for _ in 0..cols * rows {
            pixels.push(number("pixel")? as f64);
        }
    }
    let scale = info
        .lambda_scale
        .ok_or_else(|| Error::parse(0, "missing `# lambda_scale` comment"))?;
    let resolution = resolution
        .or(info.resolution)
        .ok_or_else(|| Error::InvalidParameter("PGM map resolution is unknown".into()))?;
    let geometry = GridGeometry::new(info.origin.unwrap_or(Point2::new(0.0, 0.0)), resolution, cols, rows)?;
    let mut values = vec![0.0; geometry.len()];
    for (i, px) in pixels.into_iter().enumerate() {
        let (img_row, col) = (i / cols, i % cols);
        values[geometry.linear(CellIndex::new(col, rows - 1 - img_row))] = px * scale;
    }
    GroundTruthMap::from_values(geometry, values)
}

pub fn load_truth_pgm(path: impl AsRef<Path>, resolution: Option<f64>) -> Result<GroundTruthMap> {
    read_truth_pgm(open(path.as_ref())?, resolution)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct TruthRow {
    col: usize,
    row: usize,
    lambda: f64,
}

/// Loads `col,row,lambda` rows onto the given geometry; unlisted cells are
/// free.
pub fn read_truth_csv(r: impl Read, geometry: GridGeometry) -> Result<GroundTruthMap> {
    let mut map = GroundTruthMap::empty(geometry);
    for row in csv::Reader::from_reader(r).deserialize() {
        let row: TruthRow = row?;
        map.set_intensity(CellIndex::new(row.col, row.row), row.lambda)?;
    }
    Ok(map)
}

pub fn load_truth_csv(path: impl AsRef<Path>, geometry: GridGeometry) -> Result<GroundTruthMap> {
    read_truth_csv(open(path.as_ref())?, geometry)
}

pub fn write_truth_csv(map: &GroundTruthMap, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (i, &lambda) in map.values().iter().enumerate() {
        let c = map.geometry().cell_at(i);
        out.serialize(TruthRow {
            col: c.col,
            row: c.row,
            lambda,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// One beam of a scan log. `t` identifies the scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub t: f64,
    pub pose_x: f64,
    pub pose_y: f64,
    pub pose_theta: f64,
    pub angle: f64,
    pub range: f64,
    #[serde(with = "flag")]
    pub hit: bool,
}

impl ScanRecord {
    pub fn new(t: f64, pose: Pose2, beam: &Beam) -> Self {
        Self {
            t,
            pose_x: pose.x,
            pose_y: pose.y,
            pose_theta: pose.theta,
            angle: beam.angle,
            range: beam.range,
            hit: beam.hit,
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.pose_x, self.pose_y, self.pose_theta)
    }

    pub fn beam(&self) -> Beam {
        Beam {
            origin: Point2::new(self.pose_x, self.pose_y),
            angle: self.angle,
            range: self.range,
            hit: self.hit,
        }
    }
}

/// Booleans as 0/1, also accepting `true`/`false` on input.
mod flag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match String::deserialize(d)?.trim() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(D::Error::custom(format!("expected 0 or 1, got `{other}`"))),
        }
    }
}

pub fn write_scan_log(records: &[ScanRecord], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_scan_log(r: impl Read) -> Result<Vec<ScanRecord>> {
    Ok(csv::Reader::from_reader(r).deserialize().collect::<Result<_, _>>()?)
}

pub fn load_scan_log(path: impl AsRef<Path>) -> Result<Vec<ScanRecord>> {
    read_scan_log(open(path.as_ref())?)
}

/// Groups consecutive records sharing a `t` into scans.
pub fn group_scans(records: &[ScanRecord]) -> Vec<(f64, Pose2, Vec<Beam>)> {
    let mut scans: Vec<(f64, Pose2, Vec<Beam>)> = Vec::new();
    for r in records {
        match scans.last_mut() {
            Some((t, _, beams)) if *t == r.t => beams.push(r.beam()),
            _ => scans.push((r.t, r.pose(), vec![r.beam()])),
        }
    }
    scans
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct PoseRow {
    x: f64,
    y: f64,
    theta: f64,
}

pub fn write_path(poses: &[Pose2], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in poses {
        out.serialize(PoseRow {
            x: p.x,
            y: p.y,
            theta: p.theta,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_path(r: impl Read) -> Result<Vec<Pose2>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| {
            let p: PoseRow = row?;
            Ok(Pose2::new(p.x, p.y, p.theta))
        })
        .collect()
}

pub fn load_path(path: impl AsRef<Path>) -> Result<Vec<Pose2>> {
    read_path(open(path.as_ref())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RiskCsvRow {
    cell_index: usize,
    cum_area: f64,
    lambda: f64,
    f: f64,
    cdf: f64,
    partial_risk: f64,
}

/// `cell_index` is the row-major index of the cell in `geometry`.
pub fn write_risk_report(geometry: &GridGeometry, rows: &[RiskRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(RiskCsvRow {
            cell_index: geometry.linear(r.cell),
            cum_area: r.cum_area,
            lambda: r.lambda,
            f: r.pdf,
            cdf: r.cdf,
            partial_risk: r.partial_risk,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// One planning step of an episode log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerLogRow {
    pub t: f64,
    pub v: f64,
    pub omega: f64,
    pub risk_upper: f64,
    pub n_admissible: usize,
    #[serde(with = "flag")]
    pub stopped: bool,
}

pub fn write_planner_log(rows: &[PlannerLogRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_planner_log(r: impl Read) -> Result<Vec<PlannerLogRow>> {
    Ok(csv::Reader::from_reader(r).deserialize().collect::<Result<_, _>>()?)
}
