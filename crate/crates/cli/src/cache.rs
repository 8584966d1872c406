//! Fingerprint-keyed map cache. Keys are content hashes of the scenario and
//! mode, so a stale entry can only arise from a hand-edited file; those are
//! detected and rebuilt.

use std::path::{Path, PathBuf};

use irsmap_core::radiomap::build_map;
use irsmap_core::{MapMode, RadioMap, Result, Scenario};

/// Cache directory from the flag, falling back to `IRSMAP_CACHE_DIR`.
pub fn resolve_cache_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os("IRSMAP_CACHE_DIR").map(PathBuf::from))
}

/// Return the cached map for (scenario, mode) or build and cache it.
pub fn load_or_build(scene: &Scenario, mode: MapMode, cache: Option<&Path>) -> Result<RadioMap> {
    let fingerprint = scene.fingerprint(&mode.to_string());
    let Some(dir) = cache else {
        return build_map(scene, mode);
    };
    let path = dir.join(format!("{fingerprint}.csv"));
    if path.exists() {
        match RadioMap::import(&path) {
            Ok(map) if map.fingerprint == fingerprint => return Ok(map),
            Ok(_) => eprintln!(
                "warning: cached map {} does not match its key; rebuilding",
                path.display()
            ),
            Err(e) => eprintln!(
                "warning: cached map {} unreadable ({e}); rebuilding",
                path.display()
            ),
        }
    }
    let map = build_map(scene, mode)?;
    map.export(&path)?;
    Ok(map)
}
