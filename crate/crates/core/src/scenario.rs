//! Scene and system description: AP/IRS poses, obstacles, grid, channel
//! parameters, robot endpoints, and the IRS element layout.
//!
//! Scenarios are loaded from a TOML file (see `scenarios/indoor_factory.toml`
//! for the canonical example and `README.md` for the schema). All lengths are
//! in meters, frequencies in Hz, angles in radians; the Rician factor is
//! given in dB in the file and stored in linear scale.

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{in_obstacle_footprint, GridSpec, ObstacleBox, Point3};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// IRS element layout: a uniform rectangular panel of `nx * nz` sub-surfaces,
/// each a contiguous `sub_nx * sub_nz` block of elements sharing one phase
/// shift. Total element count is `n_sub() * per_sub()`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrsLayout {
    /// Sub-surfaces along the panel's horizontal axis.
    pub nx: usize,
    /// Sub-surfaces along the panel's vertical axis.
    pub nz: usize,
    /// Elements per sub-surface along the horizontal axis.
    pub sub_nx: usize,
    /// Elements per sub-surface along the vertical axis.
    pub sub_nz: usize,
    /// Element center spacing in meters.
    pub element_spacing: f64,
}

impl IrsLayout {
    /// Number of sub-surfaces (independent phase shifts).
    pub fn n_sub(&self) -> usize {
        self.nx * self.nz
    }

    /// Elements per sub-surface.
    pub fn per_sub(&self) -> usize {
        self.sub_nx * self.sub_nz
    }

    /// Total number of reflecting elements.
    pub fn total_elements(&self) -> usize {
        self.n_sub() * self.per_sub()
    }
}

/// Full scene + system parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ap_pos: Point3,
    pub irs_pos: Point3,
    /// Unit normal of the IRS panel.
    pub irs_normal: Point3,
    pub irs_layout: IrsLayout,
    pub obstacles: Vec<ObstacleBox>,
    pub grid: GridSpec,
    /// Robot antenna height in meters.
    pub robot_height: f64,
    pub start: Point3,
    pub goal: Point3,
    /// Maximum robot speed in m/s.
    pub max_speed: f64,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// Rician factor of unblocked links, linear scale.
    pub rician_kappa: f64,
    /// Default expected-gain threshold in dB.
    pub min_gain_db: f64,
}

impl Scenario {
    /// Load and validate a scenario from a TOML file.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Parse and validate a scenario from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().to_string()))?;
        raw.build()
    }

    /// Built-in 20 m x 20 m indoor factory demo scene: AP and IRS on opposite
    /// walls, five 4 x 4 x 1.3 m obstacles, 0.5 m grid, 1200-element IRS.
    pub fn indoor_factory() -> Self {
        let layout = IrsLayout {
            nx: 10,
            nz: 6,
            sub_nx: 5,
            sub_nz: 4,
            element_spacing: SPEED_OF_LIGHT / (2.0 * 2.0e9),
        };
        let obstacles = [(-5.0, -5.0), (5.0, -5.0), (0.0, 0.0), (-3.0, 4.0), (3.0, 4.0)]
            .iter()
            .map(|&(cx, cy)| ObstacleBox {
                center_x: cx,
                center_y: cy,
                size_x: 4.0,
                size_y: 4.0,
                height: 1.3,
            })
            .collect();
        Scenario {
            ap_pos: Point3::new(0.0, 10.0, 2.0),
            irs_pos: Point3::new(0.0, -10.0, 2.0),
            irs_normal: Point3::new(0.0, 1.0, 0.0),
            irs_layout: layout,
            obstacles,
            grid: GridSpec::covering(-10.0, 10.0, -10.0, 10.0, 0.5, 1.0).unwrap(),
            robot_height: 1.0,
            start: Point3::new(-10.0, 0.0, 1.0),
            goal: Point3::new(10.0, 0.0, 1.0),
            max_speed: 1.0,
            carrier_freq: 2.0e9,
            rician_kappa: 10f64.powf(3.0 / 10.0),
            min_gain_db: -63.0,
        }
    }

    /// Replace the IRS element count, keeping the per-sub-surface block and
    /// the horizontal sub-surface count fixed (the panel grows vertically).
    pub fn with_total_elements(mut self, m: usize) -> Result<Self> {
        let per_col = self.irs_layout.per_sub() * self.irs_layout.nx;
        if m == 0 || !m.is_multiple_of(per_col) {
            return Err(Error::Config(format!(
                "element count {m} is not a multiple of elements-per-row {per_col}"
            )));
        }
        self.irs_layout.nz = m / per_col;
        Ok(self)
    }

    /// Carrier wavelength in meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// 3D centers of all IRS elements, ordered so that each sub-surface's
    /// elements occupy one contiguous block of `per_sub()` entries.
    pub fn irs_element_positions(&self) -> Vec<Point3> {
        let l = &self.irs_layout;
        let (u, v) = panel_axes(&self.irs_normal);
        let cols = l.nx * l.sub_nx;
        let rows = l.nz * l.sub_nz;
        let s = l.element_spacing;
        let mut positions = Vec::with_capacity(l.total_elements());
        for bz in 0..l.nz {
            for bx in 0..l.nx {
                for ez in 0..l.sub_nz {
                    for ex in 0..l.sub_nx {
                        let ix = (bx * l.sub_nx + ex) as f64 - (cols as f64 - 1.0) / 2.0;
                        let iz = (bz * l.sub_nz + ez) as f64 - (rows as f64 - 1.0) / 2.0;
                        positions.push(Point3::new(
                            self.irs_pos.x + s * (ix * u.x + iz * v.x),
                            self.irs_pos.y + s * (ix * u.y + iz * v.y),
                            self.irs_pos.z + s * (ix * u.z + iz * v.z),
                        ));
                    }
                }
            }
        }
        positions
    }

    /// Content hash of all physical parameters plus the map mode tag; used to
    /// key map caches and detect stale imports.
    pub fn fingerprint(&self, mode_tag: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_string().as_bytes());
        hasher.update(b"|mode=");
        hasher.update(mode_tag.as_bytes());
        let digest = hasher.finalize();
        hex::encode(&digest[..8])
    }

    fn canonical_string(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let p = |p: &Point3| format!("{:?},{:?},{:?}", p.x, p.y, p.z);
        let _ = write!(
            s,
            "ap={};irs={};normal={};layout={},{},{},{},{:?};grid={},{:?},{},{};h0={:?};start={};goal={};vmax={:?};fc={:?};kappa={:?};gamma={:?};obstacles=",
            p(&self.ap_pos),
            p(&self.irs_pos),
            p(&self.irs_normal),
            self.irs_layout.nx,
            self.irs_layout.nz,
            self.irs_layout.sub_nx,
            self.irs_layout.sub_nz,
            self.irs_layout.element_spacing,
            p(&self.grid.q0),
            self.grid.delta,
            self.grid.nx,
            self.grid.ny,
            self.robot_height,
            p(&self.start),
            p(&self.goal),
            self.max_speed,
            self.carrier_freq,
            self.rician_kappa,
            self.min_gain_db,
        );
        for o in &self.obstacles {
            let _ = write!(
                s,
                "[{:?},{:?},{:?},{:?},{:?}]",
                o.center_x, o.center_y, o.size_x, o.size_y, o.height
            );
        }
        s
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if !self.ap_pos.is_finite() || !self.irs_pos.is_finite() {
            return bad("AP and IRS positions must be finite".into());
        }
        let norm = (self.irs_normal.x.powi(2)
            + self.irs_normal.y.powi(2)
            + self.irs_normal.z.powi(2))
        .sqrt();
        if !(norm > 1e-12) {
            return bad("IRS normal must be a non-zero vector".into());
        }
        if !(self.max_speed > 0.0) {
            return bad(format!("robot.max_speed must be positive, got {}", self.max_speed));
        }
        if !(self.carrier_freq > 0.0) {
            return bad(format!(
                "channel.carrier_freq_hz must be positive, got {}",
                self.carrier_freq
            ));
        }
        if !(self.rician_kappa >= 0.0) {
            return bad("channel.rician_kappa_db must not be NaN".into());
        }
        let l = &self.irs_layout;
        if l.nx < 1 || l.nz < 1 || l.sub_nx < 1 || l.sub_nz < 1 {
            return bad("irs sub-surface and element counts must be at least 1".into());
        }
        if !(l.element_spacing > 0.0) {
            return bad(format!(
                "irs.element_spacing_m must be positive, got {}",
                l.element_spacing
            ));
        }
        for (k, o) in self.obstacles.iter().enumerate() {
            if !(o.size_x > 0.0 && o.size_y > 0.0 && o.height > 0.0) {
                return bad(format!("obstacle #{} must have positive size and height", k + 1));
            }
        }
        for (name, q) in [("robot.start", &self.start), ("robot.goal", &self.goal)] {
            self.grid
                .cell_of(q)
                .map_err(|_| Error::InvalidScenario(format!("{name} lies outside the grid region")))?;
            if in_obstacle_footprint(&self.obstacles, q) {
                return bad(format!("{name} lies inside an obstacle footprint"));
            }
        }
        if self.ap_pos == self.irs_pos {
            return bad("AP and IRS positions coincide".into());
        }
        // Path loss is undefined at zero distance; reject endpoints that sit
        // exactly on a grid cell center.
        for (name, p) in [("ap.position", &self.ap_pos), ("irs.position", &self.irs_pos)] {
            if p.z == self.grid.q0.z {
                if let Ok((i, j)) = self.grid.cell_of(p) {
                    if self.grid.cell_center(i, j).expect("cell in range") == *p {
                        return bad(format!("{name} coincides with a grid cell center"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Build the panel's in-plane axes from its normal: `u` is horizontal,
/// `v` completes a right-handed frame (vertical for wall-mounted panels).
fn panel_axes(normal: &Point3) -> (Point3, Point3) {
    let n = normalize(normal);
    let z_hat = Point3::new(0.0, 0.0, 1.0);
    let mut u = cross(&n, &z_hat);
    if (u.x * u.x + u.y * u.y + u.z * u.z).sqrt() < 1e-9 {
        u = cross(&n, &Point3::new(1.0, 0.0, 0.0));
    }
    let u = normalize(&u);
    let v = cross(&u, &n);
    (u, v)
}

fn cross(a: &Point3, b: &Point3) -> Point3 {
    Point3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

fn normalize(p: &Point3) -> Point3 {
    let n = (p.x * p.x + p.y * p.y + p.z * p.z).sqrt();
    Point3::new(p.x / n, p.y / n, p.z / n)
}

// --- TOML schema ------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    room: RawRoom,
    grid: RawGrid,
    ap: RawAp,
    irs: RawIrs,
    channel: RawChannel,
    robot: RawRobot,
    #[serde(default)]
    obstacle: Vec<RawObstacle>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoom {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    cell_size: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAp {
    position: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIrs {
    position: [f64; 3],
    normal: [f64; 3],
    subsurfaces_x: usize,
    subsurfaces_z: usize,
    elements_per_subsurface_x: usize,
    elements_per_subsurface_z: usize,
    /// Defaults to half the carrier wavelength.
    element_spacing_m: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    carrier_freq_hz: f64,
    rician_kappa_db: f64,
    min_gain_db: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobot {
    antenna_height: f64,
    start: [f64; 2],
    goal: [f64; 2],
    max_speed: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    center: [f64; 2],
    size: [f64; 2],
    height: f64,
}

impl RawConfig {
    fn build(self) -> Result<Scenario> {
        if !(self.channel.carrier_freq_hz > 0.0) {
            return Err(Error::Config(format!(
                "channel.carrier_freq_hz must be positive, got {}",
                self.channel.carrier_freq_hz
            )));
        }
        let spacing = self
            .irs
            .element_spacing_m
            .unwrap_or(SPEED_OF_LIGHT / (2.0 * self.channel.carrier_freq_hz));
        let grid = GridSpec::covering(
            self.room.x_min,
            self.room.x_max,
            self.room.y_min,
            self.room.y_max,
            self.grid.cell_size,
            self.robot.antenna_height,
        )?;
        let scenario = Scenario {
            ap_pos: Point3::new(self.ap.position[0], self.ap.position[1], self.ap.position[2]),
            irs_pos: Point3::new(self.irs.position[0], self.irs.position[1], self.irs.position[2]),
            irs_normal: Point3::new(self.irs.normal[0], self.irs.normal[1], self.irs.normal[2]),
            irs_layout: IrsLayout {
                nx: self.irs.subsurfaces_x,
                nz: self.irs.subsurfaces_z,
                sub_nx: self.irs.elements_per_subsurface_x,
                sub_nz: self.irs.elements_per_subsurface_z,
                element_spacing: spacing,
            },
            obstacles: self
                .obstacle
                .iter()
                .map(|o| ObstacleBox {
                    center_x: o.center[0],
                    center_y: o.center[1],
                    size_x: o.size[0],
                    size_y: o.size[1],
                    height: o.height,
                })
                .collect(),
            grid,
            robot_height: self.robot.antenna_height,
            start: Point3::new(self.robot.start[0], self.robot.start[1], self.robot.antenna_height),
            goal: Point3::new(self.robot.goal[0], self.robot.goal[1], self.robot.antenna_height),
            max_speed: self.robot.max_speed,
            carrier_freq: self.channel.carrier_freq_hz,
            rician_kappa: 10f64.powf(self.channel.rician_kappa_db / 10.0),
            min_gain_db: self.channel.min_gain_db,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
