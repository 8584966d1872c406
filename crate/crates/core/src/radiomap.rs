//! Channel power gain maps: per-cell maximum expected gain over a grid, the
//! thresholded feasible map, and their CSV / graymap serialization.
//!
//! Map values are linear power gains; obstacle cells carry a `-inf` sentinel.
//! On construction every finite value is snapped to the fixed point of the
//! dB-and-back conversion, so the CSV (which stores dB) represents the stored
//! values exactly and export/import round-trips are bit-identical.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::{db_to_linear, linear_to_db, link_stats, los_components, LinkEnd};
use crate::error::{Error, Result};
use crate::geometry::{in_obstacle_footprint, GridSpec};
use crate::phase::{achieved_gain, PhaseResolution};
use crate::scenario::Scenario;

/// How the per-cell gain is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapMode {
    /// Direct AP-user link only.
    NoIrs,
    /// IRS with continuous phase shifters at the per-cell optimum.
    Continuous,
    /// IRS with `L`-level phase shifters, per-cell quantized optimum.
    Discrete(u32),
}

impl MapMode {
    pub fn phase_resolution(&self) -> Option<PhaseResolution> {
        match self {
            MapMode::NoIrs => None,
            MapMode::Continuous => Some(PhaseResolution::Continuous),
            MapMode::Discrete(l) => Some(PhaseResolution::Discrete(*l)),
        }
    }
}

impl fmt::Display for MapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapMode::NoIrs => write!(f, "no_irs"),
            MapMode::Continuous => write!(f, "continuous"),
            MapMode::Discrete(l) => write!(f, "discrete{l}"),
        }
    }
}

impl FromStr for MapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no_irs" | "no-irs" => Ok(MapMode::NoIrs),
            "continuous" => Ok(MapMode::Continuous),
            _ => {
                if let Some(rest) = s.strip_prefix("discrete") {
                    let levels: u32 = rest.parse().map_err(|_| {
                        Error::Config(format!("bad mode {s:?}: expected discrete<levels>"))
                    })?;
                    if levels < 2 {
                        return Err(Error::BadLevels(levels));
                    }
                    Ok(MapMode::Discrete(levels))
                } else {
                    Err(Error::Config(format!(
                        "bad mode {s:?}: expected no_irs, continuous, or discrete<levels>"
                    )))
                }
            }
        }
    }
}

/// Expected channel power gain map over the grid. `values` is row-major with
/// the x index outermost: entry `(i, j)` sits at `(i-1) * ny + (j-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioMap {
    pub grid: GridSpec,
    pub mode: MapMode,
    /// Content hash of the generating scenario and mode.
    pub fingerprint: String,
    pub values: Vec<f64>,
}

/// Binary feasibility mask: cell `(i, j)` is flagged iff its map value meets
/// the threshold. Carries the source map's mode and fingerprint for
/// provenance in exports.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleMap {
    pub grid: GridSpec,
    pub threshold_db: f64,
    pub mode: MapMode,
    pub fingerprint: String,
    pub flags: Vec<bool>,
}

/// Summary statistics over the finite (non-obstacle) cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapStats {
    pub finite_cells: usize,
    pub obstacle_cells: usize,
    pub min_db: f64,
    pub max_db: f64,
    pub median_db: f64,
}

/// Snap to the fixed point of linear -> dB -> linear so the dB form is exact.
fn canonical_gain(v: f64) -> f64 {
    let mut x = v;
    for _ in 0..8 {
        let y = db_to_linear(linear_to_db(x));
        if y == x {
            return x;
        }
        x = y;
    }
    x
}

/// Evaluate the gain map for `scene` under `mode`. Cells are independent and
/// evaluated in parallel; assembly order is fixed, so the result is
/// bit-identical across runs and thread counts.
pub fn build_map(scene: &Scenario, mode: MapMode) -> Result<RadioMap> {
    let grid = scene.grid;
    let cells: Vec<(usize, usize)> = (1..=grid.nx)
        .flat_map(|i| (1..=grid.ny).map(move |j| (i, j)))
        .collect();
    let values: Result<Vec<f64>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let q = grid.cell_center(i, j)?;
            if in_obstacle_footprint(&scene.obstacles, &q) {
                return Ok(f64::NEG_INFINITY);
            }
            let raw = match mode {
                MapMode::NoIrs => link_stats(scene, &q, LinkEnd::Ap)?.path_loss,
                MapMode::Continuous | MapMode::Discrete(_) => {
                    let los = los_components(scene, &q)?;
                    achieved_gain(&los, mode.phase_resolution().expect("irs mode"))?
                }
            };
            Ok(canonical_gain(raw))
        })
        .collect();
    Ok(RadioMap {
        grid,
        mode,
        fingerprint: scene.fingerprint(&mode.to_string()),
        values: values?,
    })
}

/// Threshold the map at `threshold_db` (compared once, in the linear domain).
pub fn feasible_map(map: &RadioMap, threshold_db: f64) -> FeasibleMap {
    let threshold = db_to_linear(threshold_db);
    FeasibleMap {
        grid: map.grid,
        threshold_db,
        mode: map.mode,
        fingerprint: map.fingerprint.clone(),
        flags: map.values.iter().map(|&v| v >= threshold).collect(),
    }
}

impl RadioMap {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.offset(i, j)]
    }

    pub fn stats(&self) -> MapStats {
        let mut finite: Vec<f64> = self
            .values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .map(linear_to_db)
            .collect();
        finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = finite.len();
        let median = if n == 0 {
            f64::NAN
        } else if n % 2 == 1 {
            finite[n / 2]
        } else {
            0.5 * (finite[n / 2 - 1] + finite[n / 2])
        };
        MapStats {
            finite_cells: n,
            obstacle_cells: self.values.len() - n,
            min_db: finite.first().copied().unwrap_or(f64::NAN),
            max_db: finite.last().copied().unwrap_or(f64::NAN),
            median_db: median,
        }
    }

    /// Render the map as CSV: `# key: value` header lines, then `nx` rows of
    /// `ny` comma-separated dB values (`-inf` for obstacle cells).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# irsmap radio map v1\n");
        out.push_str(&format!("# fingerprint: {}\n", self.fingerprint));
        out.push_str(&format!("# mode: {}\n", self.mode));
        out.push_str(&format!("# delta: {:?}\n", self.grid.delta));
        out.push_str(&format!(
            "# q0: {:?},{:?},{:?}\n",
            self.grid.q0.x, self.grid.q0.y, self.grid.q0.z
        ));
        out.push_str(&format!("# cells: {},{}\n", self.grid.nx, self.grid.ny));
        out.push_str("# unit: dB\n");
        for i in 1..=self.grid.nx {
            let row: Vec<String> = (1..=self.grid.ny)
                .map(|j| {
                    let v = self.value(i, j);
                    if v.is_finite() {
                        format!("{:?}", linear_to_db(v))
                    } else {
                        "-inf".to_string()
                    }
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Write the CSV atomically (temp file + rename).
    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::fileio::atomic_write(path, self.to_csv().as_bytes())
    }

    /// Parse a map from CSV text. Errors carry 1-based line and column info;
    /// for data rows the column is the field index.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, magic) = lines
            .next()
            .ok_or_else(|| Error::parse(1, 1, "empty file"))?;
        if magic.trim() != "# irsmap radio map v1" {
            return Err(Error::parse(1, 1, "not an irsmap radio map (bad magic line)"));
        }

        let mut fingerprint = None;
        let mut mode = None;
        let mut delta = None;
        let mut q0 = None;
        let mut cells = None;
        let mut data_start = None;
        for (idx, line) in lines.by_ref() {
            let lineno = idx + 1;
            if let Some(rest) = line.strip_prefix('#') {
                let (key, value) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::parse(lineno, 1, "header line missing ':'"))?;
                let value = value.trim();
                match key.trim() {
                    "fingerprint" => fingerprint = Some(value.to_string()),
                    "mode" => {
                        mode = Some(value.parse::<MapMode>().map_err(|e| {
                            Error::parse(lineno, 1, format!("bad mode: {e}"))
                        })?)
                    }
                    "delta" => {
                        delta = Some(parse_f64(value, lineno, 1)?);
                    }
                    "q0" => {
                        let parts: Vec<&str> = value.split(',').collect();
                        if parts.len() != 3 {
                            return Err(Error::parse(lineno, 1, "q0 needs 3 components"));
                        }
                        q0 = Some(crate::geometry::Point3::new(
                            parse_f64(parts[0], lineno, 1)?,
                            parse_f64(parts[1], lineno, 2)?,
                            parse_f64(parts[2], lineno, 3)?,
                        ));
                    }
                    "cells" => {
                        let parts: Vec<&str> = value.split(',').collect();
                        if parts.len() != 2 {
                            return Err(Error::parse(lineno, 1, "cells needs 2 components"));
                        }
                        let nx = parse_usize(parts[0], lineno, 1)?;
                        let ny = parse_usize(parts[1], lineno, 2)?;
                        cells = Some((nx, ny));
                    }
                    "unit" => {
                        if value != "dB" {
                            return Err(Error::parse(lineno, 1, format!("unsupported unit {value:?}")));
                        }
                    }
                    other => {
                        return Err(Error::parse(lineno, 1, format!("unknown header key {other:?}")));
                    }
                }
            } else {
                data_start = Some((idx, line));
                break;
            }
        }

        let fingerprint =
            fingerprint.ok_or_else(|| Error::parse(1, 1, "missing fingerprint header"))?;
        let mode = mode.ok_or_else(|| Error::parse(1, 1, "missing mode header"))?;
        let delta = delta.ok_or_else(|| Error::parse(1, 1, "missing delta header"))?;
        let q0 = q0.ok_or_else(|| Error::parse(1, 1, "missing q0 header"))?;
        let (nx, ny) = cells.ok_or_else(|| Error::parse(1, 1, "missing cells header"))?;
        if nx < 1 || ny < 1 {
            return Err(Error::parse(1, 1, "cell counts must be positive"));
        }

        let mut values = vec![0.0_f64; nx * ny];
        let mut rows = 0usize;
        let first_row = data_start.into_iter();
        for (idx, line) in first_row.chain(lines) {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            if rows >= nx {
                return Err(Error::parse(
                    lineno,
                    1,
                    format!("expected {nx} data rows, found more"),
                ));
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != ny {
                return Err(Error::parse(
                    lineno,
                    fields.len().min(ny) + 1,
                    format!("expected {ny} values per row, got {}", fields.len()),
                ));
            }
            for (col, field) in fields.iter().enumerate() {
                let db = parse_f64(field.trim(), lineno, col + 1)?;
                if db.is_nan() {
                    return Err(Error::parse(lineno, col + 1, "map value must not be NaN"));
                }
                values[rows * ny + col] = if db == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    db_to_linear(db)
                };
            }
            rows += 1;
        }
        if rows != nx {
            return Err(Error::parse(
                text.lines().count(),
                1,
                format!("expected {nx} data rows, got {rows}"),
            ));
        }

        Ok(RadioMap {
            grid: GridSpec {
                q0,
                delta,
                nx,
                ny,
            },
            mode,
            fingerprint,
            values,
        })
    }

    /// Load a map CSV from disk.
    pub fn import(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    /// Render as an ASCII portable graymap, min-max scaled over finite cells
    /// (1..255); obstacle cells are 0. Row order is top-down (largest j
    /// first), so the image matches a bird's-eye view with +y up.
    pub fn to_pgm(&self) -> String {
        let stats = self.stats();
        let span = stats.max_db - stats.min_db;
        let mut out = String::new();
        out.push_str("P2\n");
        out.push_str(&format!("# fingerprint: {}\n", self.fingerprint));
        out.push_str(&format!("{} {}\n255\n", self.grid.nx, self.grid.ny));
        for j in (1..=self.grid.ny).rev() {
            let row: Vec<String> = (1..=self.grid.nx)
                .map(|i| {
                    let v = self.value(i, j);
                    if !v.is_finite() {
                        "0".to_string()
                    } else if span <= 0.0 {
                        "255".to_string()
                    } else {
                        let t = (linear_to_db(v) - stats.min_db) / span;
                        format!("{}", 1 + (t * 254.0).round() as u32)
                    }
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn export_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::fileio::atomic_write(path, self.to_pgm().as_bytes())
    }
}

impl FeasibleMap {
    pub fn flag(&self, i: usize, j: usize) -> bool {
        self.flags[self.grid.offset(i, j)]
    }

    pub fn feasible_cells(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// CSV rendering mirroring the radio map layout with 0/1 entries.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# irsmap feasible map v1\n");
        out.push_str(&format!("# fingerprint: {}\n", self.fingerprint));
        out.push_str(&format!("# mode: {}\n", self.mode));
        out.push_str(&format!("# threshold_db: {:?}\n", self.threshold_db));
        out.push_str(&format!("# delta: {:?}\n", self.grid.delta));
        out.push_str(&format!(
            "# q0: {:?},{:?},{:?}\n",
            self.grid.q0.x, self.grid.q0.y, self.grid.q0.z
        ));
        out.push_str(&format!("# cells: {},{}\n", self.grid.nx, self.grid.ny));
        for i in 1..=self.grid.nx {
            let row: Vec<&str> = (1..=self.grid.ny)
                .map(|j| if self.flag(i, j) { "1" } else { "0" })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::fileio::atomic_write(path, self.to_csv().as_bytes())
    }
}

fn parse_f64(s: &str, line: usize, column: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(line, column, format!("bad number {s:?}")))
}

fn parse_usize(s: &str, line: usize, column: usize) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::parse(line, column, format!("bad count {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;

    fn tiny_map() -> RadioMap {
        RadioMap {
            grid: GridSpec {
                q0: Point3::new(0.25, 0.25, 1.0),
                delta: 0.5,
                nx: 2,
                ny: 2,
            },
            mode: MapMode::Continuous,
            fingerprint: "deadbeef00000000".into(),
            values: vec![
                canonical_gain(db_to_linear(-60.0)),
                canonical_gain(db_to_linear(-61.5)),
                f64::NEG_INFINITY,
                canonical_gain(db_to_linear(-59.25)),
            ],
        }
    }

    #[test]
    fn mode_round_trips_through_strings() {
        for mode in [MapMode::NoIrs, MapMode::Continuous, MapMode::Discrete(4)] {
            assert_eq!(mode.to_string().parse::<MapMode>().unwrap(), mode);
        }
        assert!("discrete1".parse::<MapMode>().is_err());
        assert!("banana".parse::<MapMode>().is_err());
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let map = tiny_map();
        let text = map.to_csv();
        let back = RadioMap::from_csv(&text).unwrap();
        assert_eq!(back.values, map.values);
        assert_eq!(back.grid, map.grid);
        assert_eq!(back.mode, map.mode);
        assert_eq!(back.fingerprint, map.fingerprint);
    }

    #[test]
    fn hand_written_fixture_parses() {
        let text = "\
# irsmap radio map v1
# fingerprint: 0123456789abcdef
# mode: no_irs
# delta: 1.0
# q0: 0.5,0.5,1.0
# cells: 2,2
# unit: dB
-50.0,-inf
-40.0,-45.5
";
        let map = RadioMap::from_csv(text).unwrap();
        assert_eq!(map.grid.nx, 2);
        assert_eq!(map.value(1, 1), db_to_linear(-50.0));
        assert_eq!(map.value(1, 2), f64::NEG_INFINITY);
        assert_eq!(map.value(2, 2), db_to_linear(-45.5));
    }

    #[test]
    fn row_count_mismatch_is_located() {
        let text = "\
# irsmap radio map v1
# fingerprint: 0123456789abcdef
# mode: no_irs
# delta: 1.0
# q0: 0.5,0.5,1.0
# cells: 3,2
# unit: dB
-50.0,-51.0
-40.0,-45.5
";
        match RadioMap::from_csv(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 9),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_value_is_located() {
        let text = "\
# irsmap radio map v1
# fingerprint: 0123456789abcdef
# mode: no_irs
# delta: 1.0
# q0: 0.5,0.5,1.0
# cells: 1,2
# unit: dB
-50.0,oops
";
        match RadioMap::from_csv(text) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!((line, column), (8, 2));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn threshold_edges() {
        let map = tiny_map();
        let all = feasible_map(&map, f64::NEG_INFINITY);
        // Obstacle cell stays excluded even under a vacuous threshold.
        assert_eq!(all.feasible_cells(), 3);
        let none = feasible_map(&map, f64::INFINITY);
        assert_eq!(none.feasible_cells(), 0);
        let mid = feasible_map(&map, -60.5);
        assert!(mid.flag(1, 1) && mid.flag(2, 2) && !mid.flag(1, 2) && !mid.flag(2, 1));
    }

    #[test]
    fn threshold_is_monotone() {
        let map = tiny_map();
        let loose = feasible_map(&map, -61.0);
        let tight = feasible_map(&map, -59.5);
        for (a, b) in tight.flags.iter().zip(&loose.flags) {
            assert!(!a || *b, "tightening the threshold must only clear flags");
        }
    }

    #[test]
    fn feasible_map_csv_layout() {
        let map = tiny_map();
        let text = feasible_map(&map, -60.5).to_csv();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# irsmap feasible map v1"));
        assert_eq!(lines.next(), Some("# fingerprint: deadbeef00000000"));
        assert_eq!(lines.next(), Some("# mode: continuous"));
        assert_eq!(lines.next(), Some("# threshold_db: -60.5"));
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        // Row i = 1: cells (1,1)=-60 and (1,2)=-61.5.
        assert_eq!(rows, vec!["1,0", "0,1"]);
    }

    #[test]
    fn pgm_shape_and_sentinels() {
        let map = tiny_map();
        let pgm = map.to_pgm();
        let mut lines = pgm.lines();
        assert_eq!(lines.next(), Some("P2"));
        lines.next(); // fingerprint comment
        assert_eq!(lines.next(), Some("2 2"));
        assert_eq!(lines.next(), Some("255"));
        // Top row is j = 2: (1,2) is the weakest finite cell, (2,2) the max.
        assert_eq!(lines.next(), Some("1 255"));
        // Bottom row j = 1 has the obstacle at (2,1).
        let bottom = lines.next().unwrap();
        assert!(bottom.ends_with(" 0"), "obstacle pixel should be 0: {bottom}");
    }
}
