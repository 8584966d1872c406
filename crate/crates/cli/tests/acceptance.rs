//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (visible under `--nocapture`). Criterion 5 is
//! reporting-only by design and never fails the suite.
//!
//! Run with:
//!   cargo test -p irsmap-cli --test acceptance -- --nocapture

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use irsmap_core::channel::{db_to_linear, expected_gain, ChannelContext};
use irsmap_core::error::Error;
use irsmap_core::montecarlo::{estimate_gain, select_probe_cells};
use irsmap_core::planner::{build_graph, feasibility_threshold_db, shortest_path};
use irsmap_core::radiomap::{build_map, feasible_map, MapMode, RadioMap};
use irsmap_core::scenario::{IrsLayout, Scenario};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn demo_scene() -> Scenario {
    Scenario::indoor_factory()
}

fn endpoints(scene: &Scenario) -> ((usize, usize), (usize, usize)) {
    (
        scene.grid.cell_of(&scene.start).unwrap(),
        scene.grid.cell_of(&scene.goal).unwrap(),
    )
}

fn plan_distance(map: &RadioMap, gain_db: f64, scene: &Scenario) -> Option<f64> {
    let (start, goal) = endpoints(scene);
    let graph = build_graph(&feasible_map(map, gain_db), false);
    shortest_path(&graph, start, goal, scene.max_speed)
        .ok()
        .map(|p| p.total_distance)
}

// ---------------------------------------------------------------------------
// 1. Monte Carlo validation of the closed-form expected gain
// ---------------------------------------------------------------------------

#[test]
fn acceptance_1_closed_form_matches_monte_carlo() {
    let started = Instant::now();
    let base = demo_scene();
    let probes = select_probe_cells(&base);
    assert!(probes.len() >= 3, "need mixed blockage cases");

    let subsurface_shapes = [(1, 1), (2, 2), (4, 4)]; // N = 1, 4, 16
    let element_shapes = [(1, 1), (2, 2), (5, 4)]; // per sub-surface = 1, 4, 20

    let mut worst_rel = 0.0f64;
    for k in 0..20u64 {
        let (nx, nz) = subsurface_shapes[(k as usize / 3) % 3];
        let (sub_nx, sub_nz) = element_shapes[k as usize % 3];
        let mut scene = base.clone();
        scene.irs_layout = IrsLayout {
            nx,
            nz,
            sub_nx,
            sub_nz,
            element_spacing: base.irs_layout.element_spacing,
        };
        if k % 5 == 4 {
            scene.rician_kappa = 0.0;
        }
        let probe = probes[k as usize % probes.len()];
        let q = scene.grid.cell_center(probe.cell.0, probe.cell.1).unwrap();
        let ctx = ChannelContext::new(&scene, &q).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(1000 + k);
        let shifts: Vec<f64> = (0..ctx.n_sub)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let reference = expected_gain(&ctx.los_channel(), &shifts).unwrap();
        let est = estimate_gain(&ctx, &shifts, 1_000_000, 5000 + k).unwrap();
        let rel = est.relative_error(reference);
        worst_rel = worst_rel.max(rel);
        assert!(
            rel < 0.01,
            "config {k} ({}x{} sub-surfaces of {}x{}, probe {}): rel err {:.3}%",
            nx,
            nz,
            sub_nx,
            sub_nz,
            probe.label,
            rel * 100.0
        );
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < 120,
        "runtime target is < 2 min, took {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 1 (closed form vs Monte Carlo): PASS - 20 configs x 1e6 samples, \
         worst rel err {:.3}%, {:.1}s",
        worst_rel * 100.0,
        elapsed.as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// 2. Phase optimality and quantization dominance
// ---------------------------------------------------------------------------

#[test]
fn acceptance_2_phase_optimality_and_quantization() {
    // (a) Exhaustive 16-level search never beats the closed form, N <= 3.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..50 {
        let n = 1 + (trial % 3);
        let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let los = irsmap_core::channel::LosChannel {
            direct: c(),
            cascade: (0..n).map(|_| c()).collect(),
            diffuse_floor: 0.1,
        };
        let peak = los.peak_gain();
        let step = std::f64::consts::TAU / 16.0;
        let mut best = f64::NEG_INFINITY;
        for combo in 0..16usize.pow(n as u32) {
            let mut rem = combo;
            let shifts: Vec<f64> = (0..n)
                .map(|_| {
                    let level = rem % 16;
                    rem /= 16;
                    level as f64 * step
                })
                .collect();
            best = best.max(expected_gain(&los, &shifts).unwrap());
        }
        assert!(
            best <= peak * (1.0 + 1e-12),
            "trial {trial}: grid search beat the closed form"
        );
    }

    // (b) Quantized maps never exceed the continuous map, on every cell.
    let scene = demo_scene();
    let cont = build_map(&scene, MapMode::Continuous).unwrap();
    for levels in [2u32, 4, 8] {
        let disc = build_map(&scene, MapMode::Discrete(levels)).unwrap();
        for (a, b) in disc.values.iter().zip(&cont.values) {
            assert!(
                *a <= b * (1.0 + 1e-12) || !b.is_finite(),
                "L={levels}: quantized cell exceeds continuous"
            );
        }
    }
    println!(
        "ACCEPTANCE 2 (phase optimality): PASS - 50 exhaustive 16-level searches bounded by \
         the closed form; L in {{2,4,8}} maps dominated by continuous on all 1600 cells"
    );
}

// ---------------------------------------------------------------------------
// 3. Planner vs brute-force oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Steps {
    orth: u32,
    diag: u32,
}

fn steps_less(a: Steps, b: Steps) -> bool {
    let p = a.orth as i64 - b.orth as i64;
    let q = a.diag as i64 - b.diag as i64;
    if q == 0 {
        return p < 0;
    }
    if q > 0 {
        p < 0 && p * p > 2 * q * q
    } else {
        p <= 0 || p * p < 2 * q * q
    }
}

fn oracle_shortest(mask: &[Vec<bool>], start: (usize, usize), goal: (usize, usize)) -> Option<Steps> {
    let nx = mask.len();
    let ny = mask[0].len();
    if !mask[start.0][start.1] || !mask[goal.0][goal.1] {
        return None;
    }
    let mut dist: Vec<Vec<Option<Steps>>> = vec![vec![None; ny]; nx];
    dist[start.0][start.1] = Some(Steps { orth: 0, diag: 0 });
    loop {
        let mut changed = false;
        for i in 0..nx {
            for j in 0..ny {
                let Some(d) = dist[i][j] else { continue };
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 || ni >= nx as i64 || nj >= ny as i64 {
                            continue;
                        }
                        let (ni, nj) = (ni as usize, nj as usize);
                        if !mask[ni][nj] {
                            continue;
                        }
                        let cand = if di != 0 && dj != 0 {
                            Steps { orth: d.orth, diag: d.diag + 1 }
                        } else {
                            Steps { orth: d.orth + 1, diag: d.diag }
                        };
                        if dist[ni][nj].is_none() || steps_less(cand, dist[ni][nj].unwrap()) {
                            dist[ni][nj] = Some(cand);
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return dist[goal.0][goal.1];
        }
    }
}

#[test]
fn acceptance_3_planner_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut feasible = 0;
    let mut infeasible = 0;
    for case in 0..100 {
        let nx = rng.random_range(2..=10);
        let ny = rng.random_range(2..=10);
        let mask: Vec<Vec<bool>> = (0..nx)
            .map(|_| (0..ny).map(|_| rng.random_bool(0.7)).collect())
            .collect();
        let start = (rng.random_range(0..nx), rng.random_range(0..ny));
        let goal = if case % 10 == 0 {
            start // exercise start == goal
        } else {
            (rng.random_range(0..nx), rng.random_range(0..ny))
        };

        let grid =
            irsmap_core::GridSpec::covering(0.0, nx as f64 * 0.5, 0.0, ny as f64 * 0.5, 0.5, 1.0)
                .unwrap();
        let mut values = vec![f64::NEG_INFINITY; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                if mask[i][j] {
                    values[grid.offset(i + 1, j + 1)] = db_to_linear(-50.0);
                }
            }
        }
        let map = RadioMap {
            grid,
            mode: MapMode::NoIrs,
            fingerprint: "acceptance".into(),
            values,
        };
        let graph = build_graph(&feasible_map(&map, -60.0), false);
        let planned = shortest_path(&graph, (start.0 + 1, start.1 + 1), (goal.0 + 1, goal.1 + 1), 1.0);
        let expected = oracle_shortest(&mask, start, goal);
        match (planned, expected) {
            (Ok(p), Some(steps)) => {
                assert_eq!(
                    (p.steps.orth, p.steps.diag),
                    (steps.orth, steps.diag),
                    "case {case}: distance mismatch"
                );
                if start == goal {
                    assert_eq!(p.total_distance, 0.0);
                }
                feasible += 1;
            }
            (Err(Error::Infeasible(_)), None) => infeasible += 1,
            (planned, expected) => {
                panic!("case {case}: planner {planned:?} vs oracle {expected:?}")
            }
        }
    }
    println!(
        "ACCEPTANCE 3 (planner vs oracle): PASS - 100 random masks <= 10x10, \
         {feasible} feasible + {infeasible} infeasible, all exact"
    );
}

// ---------------------------------------------------------------------------
// 4. Qualitative reproduction on the demo scene
// ---------------------------------------------------------------------------

#[test]
fn acceptance_4_demo_scene_qualitative() {
    let scene = demo_scene();
    let sweep_start = Instant::now();

    let build_start = Instant::now();
    let cont = build_map(&scene, MapMode::Continuous).unwrap();
    let build_time = build_start.elapsed();
    assert!(
        build_time.as_secs() < 30,
        "40x40 map at 1200 elements took {build_time:?}, target < 30 s"
    );

    let no_irs = build_map(&scene, MapMode::NoIrs).unwrap();
    let modes: Vec<(MapMode, RadioMap)> = vec![
        (MapMode::NoIrs, no_irs.clone()),
        (MapMode::Discrete(2), build_map(&scene, MapMode::Discrete(2)).unwrap()),
        (MapMode::Discrete(4), build_map(&scene, MapMode::Discrete(4)).unwrap()),
        (MapMode::Discrete(8), build_map(&scene, MapMode::Discrete(8)).unwrap()),
        (MapMode::Continuous, cont.clone()),
    ];

    // Thresholds in a band that brackets feasibility for every mode.
    let gammas: Vec<f64> = (0..17).map(|k| -66.0 + 0.25 * k as f64).collect();

    // (a) Distance is non-decreasing in the threshold, per mode, and
    // infeasibility is absorbing.
    for (mode, map) in &modes {
        let mut prev: Option<f64> = None;
        let mut dead = false;
        for &g in &gammas {
            match plan_distance(map, g, &scene) {
                Some(d) => {
                    assert!(!dead, "{mode}: feasibility returned after being lost");
                    if let Some(p) = prev {
                        assert!(d >= p - 1e-9, "{mode}: distance dropped as gamma rose");
                    }
                    prev = Some(d);
                }
                None => dead = true,
            }
        }
    }

    // (b) With the IRS the path is never longer wherever no-IRS is feasible.
    for (mode, map) in modes.iter().filter(|(m, _)| *m != MapMode::NoIrs) {
        for &g in &gammas {
            if let Some(d0) = plan_distance(&no_irs, g, &scene) {
                let d1 = plan_distance(map, g, &scene)
                    .unwrap_or_else(|| panic!("{mode}: infeasible where no-IRS is feasible"));
                assert!(d1 <= d0 + 1e-9, "{mode}: longer than no-IRS at gamma {g}");
            }
        }
    }

    // (c) Feasibility thresholds ordered by phase resolution.
    let (start, goal) = endpoints(&scene);
    let thresholds: Vec<f64> = modes
        .iter()
        .map(|(_, map)| feasibility_threshold_db(map, start, goal, false).unwrap())
        .collect();
    for w in thresholds.windows(2) {
        assert!(w[0] <= w[1] + 1e-12, "threshold ordering violated: {thresholds:?}");
    }

    // (d) More elements never lengthen the continuous-mode path. Run just
    // below the start-cell feasibility pin so the rows are feasible.
    let m_gamma = -62.4;
    let mut prev: Option<f64> = None;
    let mut m_results = Vec::new();
    for m in (1..=10).map(|k| k * 200) {
        let sized = demo_scene().with_total_elements(m).unwrap();
        let map = build_map(&sized, MapMode::Continuous).unwrap();
        let d = plan_distance(&map, m_gamma, &sized)
            .unwrap_or_else(|| panic!("M={m} infeasible at {m_gamma} dB"));
        if let Some(p) = prev {
            assert!(d <= p + 1e-9, "distance grew from M={} to M={m}", m - 200);
        }
        prev = Some(d);
        m_results.push((m, d));
    }

    let sweep_time = sweep_start.elapsed();
    assert!(sweep_time.as_secs() < 300, "sweeps took {sweep_time:?}, target < 5 min");
    println!(
        "ACCEPTANCE 4 (qualitative reproduction): PASS - map build {:.2}s, \
         thresholds {:?} dB ordered, M sweep at {m_gamma} dB: {} m -> {} m, total {:.1}s",
        build_time.as_secs_f64(),
        thresholds.iter().map(|t| (t * 100.0).round() / 100.0).collect::<Vec<_>>(),
        m_results.first().unwrap().1,
        m_results.last().unwrap().1,
        sweep_time.as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// 5. Soft quantitative targets (reported, non-blocking)
// ---------------------------------------------------------------------------

#[test]
fn acceptance_5_soft_targets_reported() {
    let scene = demo_scene();
    let (start, goal) = endpoints(&scene);
    let no_irs = build_map(&scene, MapMode::NoIrs).unwrap();
    let cont = build_map(&scene, MapMode::Continuous).unwrap();

    let t_no_irs = feasibility_threshold_db(&no_irs, start, goal, false).unwrap();
    let t_cont = feasibility_threshold_db(&cont, start, goal, false).unwrap();
    let gap = t_cont - t_no_irs;

    let mut worst_excess = 0.0f64;
    let mut g = -63.5;
    while g <= -62.5 + 1e-9 {
        if let (Some(d0), Some(d1)) = (
            plan_distance(&no_irs, g, &scene),
            plan_distance(&cont, g, &scene),
        ) {
            worst_excess = worst_excess.max(d0 / d1 - 1.0);
        }
        g += 0.1;
    }

    let within = |value: f64, target: f64, tol: f64| {
        if (value - target).abs() <= tol { "within" } else { "OUT OF" }
    };
    println!(
        "ACCEPTANCE 5 (soft targets): REPORTED (non-blocking) - \
         no-IRS feasibility threshold {t_no_irs:.2} dB vs -62.1 target ({} +/-1.5 dB); \
         continuous-vs-no-IRS threshold gap {gap:.4} dB vs 2.6 target ({} +/-1.5 dB); \
         max no-IRS detour excess in [-63.5,-62.5] {:.2}% vs 18.87% target ({} +/-10 pp)",
        within(t_no_irs, -62.1, 1.5),
        within(gap, 2.6, 1.5),
        worst_excess * 100.0,
        within(worst_excess * 100.0, 18.87, 10.0),
    );
}

// ---------------------------------------------------------------------------
// 6. Determinism of the binary
// ---------------------------------------------------------------------------

fn run_binary(args: &[String]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_irsmap"))
        .args(args)
        .env_remove("IRSMAP_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn demo_config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/indoor_factory.toml")
}

#[test]
fn acceptance_6_binary_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo_config_path().to_str().unwrap().to_string();

    let mut artifacts: Vec<(String, Vec<u8>, Vec<u8>)> = Vec::new();
    for (name, make_args) in [
        (
            "map.csv",
            Box::new(|out: &Path| {
                vec![
                    "map".into(),
                    "--config".into(),
                    config.clone(),
                    "--out".into(),
                    out.to_str().unwrap().into(),
                ]
            }) as Box<dyn Fn(&Path) -> Vec<String>>,
        ),
        (
            "path.csv",
            Box::new(|out: &Path| {
                vec![
                    "plan".into(),
                    "--config".into(),
                    config.clone(),
                    "--min-gain=-63".into(),
                    "--out".into(),
                    out.to_str().unwrap().into(),
                ]
            }),
        ),
        (
            "report.txt",
            Box::new(|out: &Path| {
                vec![
                    "validate".into(),
                    "--config".into(),
                    config.clone(),
                    "--elements".into(),
                    "200".into(),
                    "--samples".into(),
                    "100000".into(),
                    "--seed".into(),
                    "42".into(),
                    "--out".into(),
                    out.to_str().unwrap().into(),
                ]
            }),
        ),
    ] {
        let out_a = dir.path().join(format!("a_{name}"));
        let out_b = dir.path().join(format!("b_{name}"));
        let run_a = run_binary(&make_args(&out_a));
        let run_b = run_binary(&make_args(&out_b));
        assert!(run_a.status.success(), "{name}: {}", String::from_utf8_lossy(&run_a.stderr));
        assert!(run_b.status.success(), "{name}: {}", String::from_utf8_lossy(&run_b.stderr));
        artifacts.push((
            name.to_string(),
            std::fs::read(&out_a).unwrap(),
            std::fs::read(&out_b).unwrap(),
        ));
    }
    for (name, a, b) in &artifacts {
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    println!(
        "ACCEPTANCE 6 (determinism): PASS - map, path, and validation report byte-identical \
         across repeated runs"
    );
}

// ---------------------------------------------------------------------------
// 7. Serialization round-trips and located parse errors
// ---------------------------------------------------------------------------

#[test]
fn acceptance_7_serialization() {
    // Map CSV: export -> import -> re-export is lossless and byte-stable.
    let scene = demo_scene().with_total_elements(200).unwrap();
    let map = build_map(&scene, MapMode::Discrete(4)).unwrap();
    let text = map.to_csv();
    let back = RadioMap::from_csv(&text).unwrap();
    assert_eq!(back, map);
    assert_eq!(back.to_csv(), text);

    // Path CSV: every numeric field parses back to the exact planned value.
    let gain_db = -63.0;
    let (start, goal) = endpoints(&scene);
    let graph = build_graph(&feasible_map(&map, gain_db), false);
    let path = shortest_path(&graph, start, goal, scene.max_speed).unwrap();
    let csv = irsmap_core::planner::path_to_csv(&path, &map, scene.max_speed);
    let mut rows = 0;
    for line in csv.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        let x: f64 = fields[1].parse().unwrap();
        let y: f64 = fields[2].parse().unwrap();
        assert_eq!(x, path.waypoints[rows].x);
        assert_eq!(y, path.waypoints[rows].y);
        let value_db: f64 = fields[3].parse().unwrap();
        let idx = path.cells[rows];
        assert_eq!(db_to_linear(value_db), map.value(idx.0, idx.1));
        rows += 1;
    }
    assert_eq!(rows, path.cells.len());
    let header_distance: f64 = csv
        .lines()
        .find(|l| l.starts_with("# distance_m:"))
        .and_then(|l| l.rsplit(' ').next())
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(header_distance, path.total_distance);

    // Malformed fixtures produce located errors.
    let cases = [
        ("", 1usize),
        ("# not a map\n", 1),
        (
            "# irsmap radio map v1\n# fingerprint: f\n# mode: no_irs\n# delta: 1.0\n\
             # q0: 0.5,0.5,1.0\n# cells: 2,2\n# unit: dB\n-50.0,nope\n-40.0,-41.0\n",
            8,
        ),
        (
            "# irsmap radio map v1\n# fingerprint: f\n# mode: no_irs\n# delta: 1.0\n\
             # q0: 0.5,0.5,1.0\n# cells: 3,2\n# unit: dB\n-50.0,-51.0\n-40.0,-41.0\n",
            9,
        ),
    ];
    for (fixture, want_line) in cases {
        match RadioMap::from_csv(fixture) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, want_line, "fixture {fixture:?}"),
            other => panic!("fixture should fail with a located error, got {other:?}"),
        }
    }
    println!(
        "ACCEPTANCE 7 (serialization): PASS - map CSV bitwise round-trip, path CSV values \
         parse back exactly, 4 malformed fixtures produce located errors"
    );
}
