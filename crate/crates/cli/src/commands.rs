//! Subcommand implementations. Every command is deterministic given its
//! arguments and seed; all file output is whole-file atomic.

use std::fmt::Write as _;

use irsmap_core::channel::{expected_gain, linear_to_db, ChannelContext};
use irsmap_core::error::{Error, Result};
use irsmap_core::fileio::atomic_write;
use irsmap_core::montecarlo::{estimate_gain, select_probe_cells};
use irsmap_core::phase::optimal_phases;
use irsmap_core::planner::{
    build_graph, feasibility_margin_db, feasibility_threshold_db, path_to_csv, shortest_path,
    validate_path,
};
use irsmap_core::radiomap::feasible_map;
use irsmap_core::{RadioMap, Scenario};

use crate::cache;
use crate::{CommonArgs, MapArgs, PlanArgs, SweepArgs, ValidateArgs, EXIT_INFEASIBLE, EXIT_VALIDATION};

fn load_scenario(common: &CommonArgs) -> Result<Scenario> {
    let scene = Scenario::load(&common.config)?;
    match common.elements {
        Some(m) => scene.with_total_elements(m),
        None => Ok(scene),
    }
}

pub fn run_map(args: MapArgs) -> Result<u8> {
    let scene = load_scenario(&args.common)?;
    let cache_dir = cache::resolve_cache_dir(args.common.cache_dir.clone());
    let map = cache::load_or_build(&scene, args.mode, cache_dir.as_deref())?;
    map.export(&args.out)?;
    if let Some(heatmap) = &args.heatmap {
        map.export_pgm(heatmap)?;
    }
    if let Some(path) = &args.feasible {
        let gain_db = args.min_gain.unwrap_or(scene.min_gain_db);
        feasible_map(&map, gain_db).export(path)?;
    }
    let stats = map.stats();
    println!("mode: {}", map.mode);
    println!("elements: {}", scene.irs_layout.total_elements());
    println!(
        "cells: {} x {} ({} finite, {} obstacle)",
        map.grid.nx, map.grid.ny, stats.finite_cells, stats.obstacle_cells
    );
    println!(
        "gain over finite cells: min {:.3} dB, median {:.3} dB, max {:.3} dB",
        stats.min_db, stats.median_db, stats.max_db
    );
    println!("fingerprint: {}", map.fingerprint);
    println!("wrote {}", args.out.display());
    Ok(0)
}

pub fn run_plan(args: PlanArgs) -> Result<u8> {
    let scene = load_scenario(&args.common)?;
    let cache_dir = cache::resolve_cache_dir(args.common.cache_dir.clone());
    let map = match &args.map {
        Some(path) => {
            let map = RadioMap::import(path)?;
            let expected = scene.fingerprint(&map.mode.to_string());
            if map.fingerprint != expected {
                eprintln!(
                    "warning: stale map: {} has fingerprint {}, scenario expects {expected}; \
                     planning on the provided map anyway",
                    path.display(),
                    map.fingerprint
                );
            }
            if map.mode != args.mode {
                eprintln!(
                    "warning: provided map is {}, ignoring requested mode {}",
                    map.mode, args.mode
                );
            }
            map
        }
        None => cache::load_or_build(&scene, args.mode, cache_dir.as_deref())?,
    };

    let gain_db = args.min_gain.unwrap_or(scene.min_gain_db);
    let start = map.grid.cell_of(&scene.start)?;
    let goal = map.grid.cell_of(&scene.goal)?;
    let graph = build_graph(&feasible_map(&map, gain_db), args.strict_adjacency);

    let path = match shortest_path(&graph, start, goal, scene.max_speed) {
        Ok(path) => path,
        Err(Error::Infeasible(reason)) => {
            eprintln!("planning infeasible at threshold {gain_db:?} dB: {reason} ({})", reason.code());
            match feasibility_threshold_db(&map, start, goal, args.strict_adjacency) {
                Some(best) => eprintln!("nearest feasible threshold on this map: {best:.4} dB"),
                None => eprintln!("no threshold connects start and goal on this map"),
            }
            return Ok(EXIT_INFEASIBLE);
        }
        Err(e) => return Err(e),
    };

    let report = validate_path(&path, &map, gain_db, start, goal);
    atomic_write(&args.out, path_to_csv(&path, &map, scene.max_speed).as_bytes())?;

    let snap = |q: &irsmap_core::Point3, cell: (usize, usize)| {
        q.distance(&map.grid.cell_center(cell.0, cell.1).expect("cell in range"))
    };
    println!("mode: {}", map.mode);
    println!("threshold: {gain_db:?} dB");
    println!(
        "start: ({:?}, {:?}) -> cell ({}, {}), snap {:.4} m",
        scene.start.x, scene.start.y, start.0, start.1, snap(&scene.start, start)
    );
    println!(
        "goal: ({:?}, {:?}) -> cell ({}, {}), snap {:.4} m",
        scene.goal.x, scene.goal.y, goal.0, goal.1, snap(&scene.goal, goal)
    );
    println!("waypoints: {}", path.cells.len());
    println!("distance: {:.4} m", path.total_distance);
    println!("travel time: {:.4} s at {:?} m/s", path.travel_time, scene.max_speed);
    println!("feasibility margin: {:.4} dB", feasibility_margin_db(&path, &map));
    println!(
        "validation: {}",
        if report.ok { "pass" } else { "FAIL" }
    );
    println!("wrote {}", args.out.display());
    if !report.ok {
        let (idx, msg) = report.first_violation.unwrap();
        return Err(Error::Config(format!(
            "internal: planned path failed validation at waypoint {idx}: {msg}"
        )));
    }
    Ok(0)
}

pub fn run_sweep(args: SweepArgs) -> Result<u8> {
    let scene = load_scenario(&args.common)?;
    let cache_dir = cache::resolve_cache_dir(args.common.cache_dir.clone());
    let spec = crate::sweep::SweepSpec::new(args.variable, &args.values, args.modes.as_deref())?;
    let gain_db = args.min_gain.unwrap_or(scene.min_gain_db);
    let csv = crate::sweep::run(
        &scene,
        &spec,
        gain_db,
        args.strict_adjacency,
        cache_dir.as_deref(),
    )?;
    atomic_write(&args.out, csv.as_bytes())?;
    println!(
        "swept {} over {} values x {} modes",
        spec.variable,
        spec.values.len(),
        spec.modes.len()
    );
    println!("wrote {}", args.out.display());
    Ok(0)
}

pub fn run_validate(args: ValidateArgs) -> Result<u8> {
    if args.samples < 10_000 {
        return Err(Error::Config(format!(
            "validation needs at least 10000 samples, got {}",
            args.samples
        )));
    }
    let scene = load_scenario(&args.common)?;
    let probes = select_probe_cells(&scene);
    if probes.is_empty() {
        return Err(Error::Config("scenario has no usable probe cells".into()));
    }

    let mut report = String::new();
    report.push_str("# irsmap validation report v1\n");
    let _ = writeln!(report, "# scenario: {}", scene.fingerprint("validate"));
    let _ = writeln!(report, "# samples: {}", args.samples);
    let _ = writeln!(report, "# seed: {}", args.seed);
    let _ = writeln!(report, "# elements: {}", scene.irs_layout.total_elements());
    report.push_str("probe,cell_i,cell_j,closed_form_db,empirical_db,rel_error_pct,sigmas,status\n");

    let mut failures = 0usize;
    for (k, probe) in probes.iter().enumerate() {
        let q = scene.grid.cell_center(probe.cell.0, probe.cell.1)?;
        let ctx = ChannelContext::new(&scene, &q)?;
        let los = ctx.los_channel();
        let shifts = optimal_phases(&los).shifts;
        let reference = expected_gain(&los, &shifts)?;
        let est = estimate_gain(&ctx, &shifts, args.samples, args.seed + k as u64)?;
        let pass = (est.mean - reference).abs() <= 3.0 * est.std_error;
        if !pass {
            failures += 1;
        }
        let _ = writeln!(
            report,
            "{},{},{},{:.6},{:.6},{:.4},{:.2},{}",
            probe.label,
            probe.cell.0,
            probe.cell.1,
            linear_to_db(reference),
            linear_to_db(est.mean),
            est.relative_error(reference) * 100.0,
            est.sigmas_from(reference),
            if pass { "PASS" } else { "FAIL" }
        );
    }
    let _ = writeln!(
        report,
        "result: {} ({}/{} probes within 3 sigma)",
        if failures == 0 { "PASS" } else { "FAIL" },
        probes.len() - failures,
        probes.len()
    );

    print!("{report}");
    if let Some(out) = &args.out {
        atomic_write(out, report.as_bytes())?;
    }
    Ok(if failures == 0 { 0 } else { EXIT_VALIDATION })
}
