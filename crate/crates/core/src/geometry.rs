//! Scene geometry: 3D points, axis-aligned box obstacles, the planning grid,
//! and line-of-sight blockage queries.
//!
//! All queries are pure functions of immutable inputs. Boundary semantics are
//! conservative throughout: obstacle footprints and boxes are closed sets, so
//! grazing contact counts as inside / blocked.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the scene's 3D Cartesian frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Axis-aligned box obstacle standing on the floor: the footprint is centered
/// at `(center_x, center_y)` and the box spans `z in [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleBox {
    pub center_x: f64,
    pub center_y: f64,
    pub size_x: f64,
    pub size_y: f64,
    pub height: f64,
}

impl ObstacleBox {
    /// Closed 2D footprint test; z is ignored.
    pub fn footprint_contains(&self, x: f64, y: f64) -> bool {
        (x - self.center_x).abs() <= self.size_x / 2.0
            && (y - self.center_y).abs() <= self.size_y / 2.0
    }

    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        (
            [
                self.center_x - self.size_x / 2.0,
                self.center_y - self.size_y / 2.0,
                0.0,
            ],
            [
                self.center_x + self.size_x / 2.0,
                self.center_y + self.size_y / 2.0,
                self.height,
            ],
        )
    }

    /// Slab-method segment/AABB intersection. Touching a face exactly counts
    /// as an intersection.
    pub fn intersects_segment(&self, a: &Point3, b: &Point3) -> bool {
        let (lo, hi) = self.bounds();
        let origin = [a.x, a.y, a.z];
        let dir = [b.x - a.x, b.y - a.y, b.z - a.z];

        let mut t_enter = 0.0_f64;
        let mut t_exit = 1.0_f64;
        for axis in 0..3 {
            if dir[axis] == 0.0 {
                if origin[axis] < lo[axis] || origin[axis] > hi[axis] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / dir[axis];
            let mut t0 = (lo[axis] - origin[axis]) * inv;
            let mut t1 = (hi[axis] - origin[axis]) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_enter = t_enter.max(t0);
            t_exit = t_exit.min(t1);
            if t_enter > t_exit {
                return false;
            }
        }
        true
    }
}

/// Uniform square grid over the planning region. `q0` is the center of the
/// lower-left cell (its z component is the robot antenna height); cells are
/// addressed with 1-based indices `(i, j)` with `1 <= i <= nx`, `1 <= j <= ny`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q0: Point3,
    /// Cell size in meters.
    pub delta: f64,
    /// Number of cells along x.
    pub nx: usize,
    /// Number of cells along y.
    pub ny: usize,
}

impl GridSpec {
    /// Grid covering `[x_min, x_max] x [y_min, y_max]` at the given cell size,
    /// with cell centers at height `z`.
    pub fn covering(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        delta: f64,
        z: f64,
    ) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "grid cell size must be positive, got {delta}"
            )));
        }
        let nx = ((x_max - x_min) / delta).round() as i64;
        let ny = ((y_max - y_min) / delta).round() as i64;
        if nx < 1 || ny < 1 {
            return Err(Error::InvalidScenario(format!(
                "region {x_min}..{x_max} x {y_min}..{y_max} too small for cell size {delta}"
            )));
        }
        Ok(Self {
            q0: Point3::new(x_min + delta / 2.0, y_min + delta / 2.0, z),
            delta,
            nx: nx as usize,
            ny: ny as usize,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Row-major storage offset of cell `(i, j)`.
    pub fn offset(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.ny + (j - 1)
    }

    /// Center of cell `(i, j)`: `q0 + ((i-1) delta, (j-1) delta, 0)`.
    pub fn cell_center(&self, i: usize, j: usize) -> Result<Point3> {
        if i < 1 || i > self.nx || j < 1 || j > self.ny {
            return Err(Error::IndexOutOfRange {
                i,
                j,
                x: self.nx,
                y: self.ny,
            });
        }
        Ok(Point3::new(
            self.q0.x + (i - 1) as f64 * self.delta,
            self.q0.y + (j - 1) as f64 * self.delta,
            self.q0.z,
        ))
    }

    /// Cell containing `p`. Points on a shared cell edge snap to the lower
    /// index; the outer boundary of the region belongs to its edge cells.
    pub fn cell_of(&self, p: &Point3) -> Result<(usize, usize)> {
        let i = self.axis_cell(p.x - (self.q0.x - self.delta / 2.0), self.nx);
        let j = self.axis_cell(p.y - (self.q0.y - self.delta / 2.0), self.ny);
        match (i, j) {
            (Some(i), Some(j)) => Ok((i, j)),
            _ => Err(Error::OutOfRegion { x: p.x, y: p.y }),
        }
    }

    fn axis_cell(&self, offset: f64, count: usize) -> Option<usize> {
        let t = offset / self.delta;
        if t < 0.0 || t > count as f64 {
            return None;
        }
        // ceil() sends interior boundary points to the lower cell index.
        let idx = (t.ceil() as usize).max(1);
        (idx <= count).then_some(idx)
    }

    pub fn x_min(&self) -> f64 {
        self.q0.x - self.delta / 2.0
    }

    pub fn y_min(&self) -> f64 {
        self.q0.y - self.delta / 2.0
    }
}

/// True iff `(p.x, p.y)` lies inside the closed footprint of any obstacle.
/// Height is ignored: the robot cannot enter an obstacle's footprint at all.
pub fn in_obstacle_footprint(obstacles: &[ObstacleBox], p: &Point3) -> bool {
    obstacles.iter().any(|o| o.footprint_contains(p.x, p.y))
}

/// True iff the segment from `a` to `b` intersects any obstacle box.
pub fn segment_blocked(obstacles: &[ObstacleBox], a: &Point3, b: &Point3) -> bool {
    obstacles.iter().any(|o| o.intersects_segment(a, b))
}
