//! Parameter sweeps: travel distance per (value, mode) row for a swept gain
//! threshold or IRS element count.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use irsmap_core::error::{Error, Result};
use irsmap_core::planner::{build_graph, shortest_path};
use irsmap_core::radiomap::feasible_map;
use irsmap_core::{MapMode, RadioMap, Scenario};

use crate::cache;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Gamma,
    Elements,
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" | "gamma_bar" | "min_gain" => Ok(SweepVariable::Gamma),
            "elements" | "num_elements" => Ok(SweepVariable::Elements),
            _ => Err(Error::Config(format!(
                "bad sweep variable {s:?}: expected gamma or elements"
            ))),
        }
    }
}

impl std::fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepVariable::Gamma => write!(f, "gamma_bar_db"),
            SweepVariable::Elements => write!(f, "num_elements"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub modes: Vec<MapMode>,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, values_text: &str, modes_text: Option<&str>) -> Result<Self> {
        let values = parse_values(values_text)?;
        if values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if !strictly_monotone(&values) {
            return Err(Error::Config("sweep values must be strictly monotone".into()));
        }
        if matches!(variable, SweepVariable::Elements) {
            for &v in &values {
                if v <= 0.0 || v.fract() != 0.0 {
                    return Err(Error::Config(format!(
                        "element counts must be positive integers, got {v}"
                    )));
                }
            }
        }
        let modes = match modes_text {
            Some(text) => text
                .split(',')
                .map(|m| m.trim().parse::<MapMode>())
                .collect::<Result<Vec<_>>>()?,
            None => vec![
                MapMode::NoIrs,
                MapMode::Discrete(2),
                MapMode::Discrete(4),
                MapMode::Discrete(8),
                MapMode::Continuous,
            ],
        };
        if modes.is_empty() {
            return Err(Error::Config("sweep needs at least one mode".into()));
        }
        Ok(SweepSpec {
            variable,
            values,
            modes,
        })
    }
}

/// Accepts `a,b,c` or an inclusive `start:stop:step` range.
fn parse_values(text: &str) -> Result<Vec<f64>> {
    let bad = |t: &str| Error::Config(format!("bad sweep value {t:?}"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "bad range {text:?}: expected start:stop:step"
            )));
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad(parts[0]))?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad(parts[1]))?;
        let step: f64 = parts[2].trim().parse().map_err(|_| bad(parts[2]))?;
        if step == 0.0 || (stop - start) * step < 0.0 {
            return Err(Error::Config(format!(
                "range {text:?} does not terminate"
            )));
        }
        let n = ((stop - start) / step).round() as i64;
        Ok((0..=n.max(0)).map(|k| start + k as f64 * step).collect())
    } else {
        text.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad(t)))
            .collect()
    }
}

fn strictly_monotone(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] < w[1]) || values.windows(2).all(|w| w[0] > w[1])
}

/// Run the sweep and render the result CSV. Maps are shared across rows via
/// the fingerprint cache (in-memory always, on disk when a cache dir is set).
pub fn run(
    scene: &Scenario,
    spec: &SweepSpec,
    default_gain_db: f64,
    strict_adjacency: bool,
    cache_dir: Option<&Path>,
) -> Result<String> {
    let mut maps: HashMap<String, RadioMap> = HashMap::new();
    let mut load = |scene: &Scenario, mode: MapMode| -> Result<RadioMap> {
        let key = scene.fingerprint(&mode.to_string());
        if let Some(map) = maps.get(&key) {
            return Ok(map.clone());
        }
        let map = cache::load_or_build(scene, mode, cache_dir)?;
        maps.insert(key, map.clone());
        Ok(map)
    };

    let mut out = String::new();
    out.push_str("# irsmap sweep v1\n");
    let _ = writeln!(out, "# variable: {}", spec.variable);
    let _ = writeln!(
        out,
        "# modes: {}",
        spec.modes
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    match spec.variable {
        SweepVariable::Gamma => {
            let _ = writeln!(out, "# elements: {}", scene.irs_layout.total_elements());
        }
        SweepVariable::Elements => {
            let _ = writeln!(out, "# gamma_bar_db: {default_gain_db:?}");
        }
    }
    out.push_str("value,mode,status,distance_m,travel_time_s\n");

    let start = scene.grid.cell_of(&scene.start)?;
    let goal = scene.grid.cell_of(&scene.goal)?;

    for &value in &spec.values {
        let value_label = match spec.variable {
            SweepVariable::Gamma => format!("{value:?}"),
            SweepVariable::Elements => format!("{}", value as usize),
        };
        for &mode in &spec.modes {
            let (map, gain_db) = match spec.variable {
                SweepVariable::Gamma => (load(scene, mode)?, value),
                SweepVariable::Elements => {
                    let sized = scene.clone().with_total_elements(value as usize)?;
                    (load(&sized, mode)?, default_gain_db)
                }
            };
            let graph = build_graph(&feasible_map(&map, gain_db), strict_adjacency);
            match shortest_path(&graph, start, goal, scene.max_speed) {
                Ok(path) => {
                    let _ = writeln!(
                        out,
                        "{value_label},{mode},ok,{:?},{:?}",
                        path.total_distance, path.travel_time
                    );
                }
                Err(Error::Infeasible(reason)) => {
                    let _ = writeln!(out, "{value_label},{mode},{},,", reason.code());
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}
