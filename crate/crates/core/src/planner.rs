//! Minimum-distance path planning over the feasible map.
//!
//! Feasible cells become vertices of an undirected grid graph; cells whose
//! centers are at most `sqrt(2) * delta` apart are connected (8 neighbors).
//! Path lengths are tracked exactly as integer counts of orthogonal and
//! diagonal steps -- the value `orth + diag * sqrt(2)` identifies the pair
//! uniquely -- so optimality comparisons never depend on float summation
//! order and results are reproducible bit-for-bit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::channel::{db_to_linear, linear_to_db};
use crate::error::{Error, InfeasibleReason, Result};
use crate::geometry::Point3;
use crate::radiomap::{FeasibleMap, RadioMap};

/// Exact grid path length: `orth` unit steps plus `diag` diagonal steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepDistance {
    pub orth: u32,
    pub diag: u32,
}

impl StepDistance {
    pub const ZERO: StepDistance = StepDistance { orth: 0, diag: 0 };

    fn plus(self, kind: StepKind) -> StepDistance {
        match kind {
            StepKind::Orthogonal => StepDistance {
                orth: self.orth + 1,
                diag: self.diag,
            },
            StepKind::Diagonal => StepDistance {
                orth: self.orth,
                diag: self.diag + 1,
            },
        }
    }

    /// Physical length for cell size `delta`.
    pub fn meters(&self, delta: f64) -> f64 {
        (self.orth as f64 + self.diag as f64 * SQRT_2) * delta
    }
}

impl Ord for StepDistance {
    /// Compares `orth + diag * sqrt(2)` exactly using integer arithmetic.
    fn cmp(&self, other: &Self) -> Ordering {
        let p = self.orth as i64 - other.orth as i64;
        let q = self.diag as i64 - other.diag as i64;
        // Sign of p + q * sqrt(2).
        match (p == 0, q == 0) {
            (true, true) => Ordering::Equal,
            (_, true) => p.cmp(&0),
            _ if q > 0 => {
                if p >= 0 {
                    Ordering::Greater
                } else {
                    // p < 0 < q: sign decided by p^2 vs 2 q^2.
                    (2 * q * q).cmp(&(p * p))
                }
            }
            _ => {
                if p <= 0 {
                    Ordering::Less
                } else {
                    (p * p).cmp(&(2 * q * q))
                }
            }
        }
    }
}

impl PartialOrd for StepDistance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Orthogonal,
    Diagonal,
}

/// Weighted 8-connected graph over the flagged cells of a feasible map.
#[derive(Debug, Clone)]
pub struct GridGraph {
    pub grid: crate::geometry::GridSpec,
    pub threshold_db: f64,
    /// Cells `(i, j)` in lexicographic order.
    vertices: Vec<(usize, usize)>,
    /// Vertex id per grid offset, if the cell is a vertex.
    cell_to_vertex: Vec<Option<u32>>,
    adjacency: Vec<Vec<(u32, StepKind)>>,
}

/// Build the graph. With `strict_diagonals` a diagonal edge additionally
/// requires at least one of its two shared orthogonal neighbor cells to be
/// flagged, which forbids cutting the corner of an infeasible cell; the
/// default keeps the pure distance rule.
pub fn build_graph(feasible: &FeasibleMap, strict_diagonals: bool) -> GridGraph {
    let grid = feasible.grid;
    let mut cell_to_vertex = vec![None; grid.cell_count()];
    let mut vertices = Vec::new();
    for i in 1..=grid.nx {
        for j in 1..=grid.ny {
            if feasible.flag(i, j) {
                cell_to_vertex[grid.offset(i, j)] = Some(vertices.len() as u32);
                vertices.push((i, j));
            }
        }
    }

    let flagged = |i: isize, j: isize| -> bool {
        i >= 1 && j >= 1 && i <= grid.nx as isize && j <= grid.ny as isize
            && feasible.flag(i as usize, j as usize)
    };

    let adjacency = vertices
        .iter()
        .map(|&(i, j)| {
            let mut edges = Vec::new();
            for di in -1isize..=1 {
                for dj in -1isize..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as isize + di, j as isize + dj);
                    if !flagged(ni, nj) {
                        continue;
                    }
                    let kind = if di != 0 && dj != 0 {
                        if strict_diagonals
                            && !flagged(i as isize, nj)
                            && !flagged(ni, j as isize)
                        {
                            continue;
                        }
                        StepKind::Diagonal
                    } else {
                        StepKind::Orthogonal
                    };
                    let id = cell_to_vertex[grid.offset(ni as usize, nj as usize)]
                        .expect("flagged cell has a vertex id");
                    edges.push((id, kind));
                }
            }
            edges
        })
        .collect();

    GridGraph {
        grid,
        threshold_db: feasible.threshold_db,
        vertices,
        cell_to_vertex,
        adjacency,
    }
}

impl GridGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn vertex_id(&self, cell: (usize, usize)) -> Option<u32> {
        if cell.0 < 1 || cell.0 > self.grid.nx || cell.1 < 1 || cell.1 > self.grid.ny {
            return None;
        }
        self.cell_to_vertex[self.grid.offset(cell.0, cell.1)]
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.vertices
    }
}

/// A planned waypoint sequence between two cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    /// Visited cells, start first.
    pub cells: Vec<(usize, usize)>,
    /// Cell centers of the visited cells.
    pub waypoints: Vec<Point3>,
    /// Exact step counts along the path.
    pub steps: StepDistance,
    /// Total length in meters.
    pub total_distance: f64,
    /// Travel time at maximum speed, seconds.
    pub travel_time: f64,
    /// Threshold the underlying graph was built with, dB.
    pub threshold_db: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct HeapEntry {
    dist: StepDistance,
    cell: (usize, usize),
    vertex: u32,
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for smallest-distance-first,
        // breaking ties on the lexicographically smaller cell.
        other
            .dist
            .cmp(&self.dist)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra shortest path between two flagged cells. Ties are broken toward
/// the lexicographically smaller predecessor cell so equal-length paths are
/// reproducible across runs and platforms.
pub fn shortest_path(
    graph: &GridGraph,
    start: (usize, usize),
    goal: (usize, usize),
    max_speed: f64,
) -> Result<PlannedPath> {
    let start_id = graph.vertex_id(start).ok_or(Error::Infeasible(
        InfeasibleReason::StartInfeasible {
            i: start.0,
            j: start.1,
        },
    ))?;
    let goal_id = graph.vertex_id(goal).ok_or(Error::Infeasible(
        InfeasibleReason::GoalInfeasible {
            i: goal.0,
            j: goal.1,
        },
    ))?;

    let n = graph.vertex_count();
    let mut dist: Vec<Option<StepDistance>> = vec![None; n];
    let mut prev: Vec<Option<u32>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();

    dist[start_id as usize] = Some(StepDistance::ZERO);
    heap.push(HeapEntry {
        dist: StepDistance::ZERO,
        cell: start,
        vertex: start_id,
    });

    while let Some(entry) = heap.pop() {
        let u = entry.vertex as usize;
        if settled[u] {
            continue;
        }
        settled[u] = true;
        if entry.vertex == goal_id {
            break;
        }
        let du = dist[u].expect("settled vertex has a distance");
        for &(v, kind) in &graph.adjacency[u] {
            let v_idx = v as usize;
            if settled[v_idx] {
                continue;
            }
            let alt = du.plus(kind);
            match dist[v_idx] {
                Some(cur) if alt > cur => {}
                Some(cur) if alt == cur => {
                    // Equal-length alternative: keep the smaller predecessor.
                    if let Some(p) = prev[v_idx] {
                        if graph.vertices[u] < graph.vertices[p as usize] {
                            prev[v_idx] = Some(entry.vertex);
                        }
                    }
                }
                _ => {
                    dist[v_idx] = Some(alt);
                    prev[v_idx] = Some(entry.vertex);
                    heap.push(HeapEntry {
                        dist: alt,
                        cell: graph.vertices[v_idx],
                        vertex: v,
                    });
                }
            }
        }
    }

    let steps = dist[goal_id as usize].ok_or(Error::Infeasible(InfeasibleReason::NoPath))?;
    if !settled[goal_id as usize] {
        return Err(Error::Infeasible(InfeasibleReason::NoPath));
    }

    let mut cells = vec![goal];
    let mut cursor = goal_id;
    while cursor != start_id {
        cursor = prev[cursor as usize].expect("reached vertex has a predecessor");
        cells.push(graph.vertices[cursor as usize]);
    }
    cells.reverse();

    let waypoints: Vec<Point3> = cells
        .iter()
        .map(|&(i, j)| graph.grid.cell_center(i, j).expect("vertex cell in range"))
        .collect();
    let total_distance = steps.meters(graph.grid.delta);
    Ok(PlannedPath {
        cells,
        waypoints,
        steps,
        total_distance,
        travel_time: total_distance / max_speed,
        threshold_db: graph.threshold_db,
    })
}

/// Outcome of independently re-checking a planned path against a map.
#[derive(Debug, Clone, PartialEq)]
pub struct PathReport {
    pub ok: bool,
    /// Waypoint index and description of the first violated constraint.
    pub first_violation: Option<(usize, String)>,
}

impl PathReport {
    fn fail(index: usize, message: impl Into<String>) -> Self {
        PathReport {
            ok: false,
            first_violation: Some((index, message.into())),
        }
    }

    const PASS: PathReport = PathReport {
        ok: true,
        first_violation: None,
    };
}

/// Recheck every waypoint's gain against the threshold, the step-adjacency
/// constraint, and the endpoint cells.
pub fn validate_path(
    path: &PlannedPath,
    map: &RadioMap,
    threshold_db: f64,
    start: (usize, usize),
    goal: (usize, usize),
) -> PathReport {
    if path.cells.is_empty() {
        return PathReport::fail(0, "path has no waypoints");
    }
    if path.cells[0] != start {
        return PathReport::fail(0, format!("path starts at {:?}, expected {start:?}", path.cells[0]));
    }
    if *path.cells.last().unwrap() != goal {
        return PathReport::fail(
            path.cells.len() - 1,
            format!("path ends at {:?}, expected {goal:?}", path.cells.last().unwrap()),
        );
    }
    let threshold = db_to_linear(threshold_db);
    let max_step = SQRT_2 * map.grid.delta * (1.0 + 1e-12);
    for (idx, &(i, j)) in path.cells.iter().enumerate() {
        if i < 1 || i > map.grid.nx || j < 1 || j > map.grid.ny {
            return PathReport::fail(idx, format!("cell ({i}, {j}) outside the grid"));
        }
        if !(map.value(i, j) >= threshold) {
            return PathReport::fail(
                idx,
                format!(
                    "cell ({i}, {j}) gain {} dB below threshold {threshold_db} dB",
                    linear_to_db(map.value(i, j))
                ),
            );
        }
        if idx > 0 {
            let a = &path.waypoints[idx - 1];
            let b = &path.waypoints[idx];
            if a.distance(b) > max_step {
                return PathReport::fail(
                    idx,
                    format!("step of {:.3} m exceeds the adjacency limit", a.distance(b)),
                );
            }
        }
    }
    PathReport::PASS
}

/// Feasibility margin of a path: the smallest waypoint gain minus the
/// threshold, in dB.
pub fn feasibility_margin_db(path: &PlannedPath, map: &RadioMap) -> f64 {
    path.cells
        .iter()
        .map(|&(i, j)| linear_to_db(map.value(i, j)) - path.threshold_db)
        .fold(f64::INFINITY, f64::min)
}

/// Largest threshold (dB) at which a path from `start` to `goal` still
/// exists, or `None` when even the vacuous threshold is infeasible. Exact:
/// feasibility only changes at map values, so this searches the sorted
/// distinct finite values.
pub fn feasibility_threshold_db(
    map: &RadioMap,
    start: (usize, usize),
    goal: (usize, usize),
    strict_diagonals: bool,
) -> Option<f64> {
    let mut candidates: Vec<f64> = map.values.iter().copied().filter(|v| v.is_finite()).collect();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    if candidates.is_empty() {
        return None;
    }

    // Flags built on the exact linear candidate; a dB round-trip here could
    // wobble the comparison by an ulp and skip the critical cell.
    let connected = |v: f64| -> bool {
        let feas = FeasibleMap {
            grid: map.grid,
            threshold_db: linear_to_db(v),
            mode: map.mode,
            fingerprint: map.fingerprint.clone(),
            flags: map.values.iter().map(|&x| x >= v).collect(),
        };
        let graph = build_graph(&feas, strict_diagonals);
        shortest_path(&graph, start, goal, 1.0).is_ok()
    };

    if !connected(candidates[0]) {
        return None;
    }
    // Largest candidate index that stays connected.
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if connected(candidates[mid]) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Some(linear_to_db(candidates[lo]))
}

/// Path CSV: header metadata, then one line per waypoint with its map value
/// and the cumulative distance.
pub fn path_to_csv(path: &PlannedPath, map: &RadioMap, max_speed: f64) -> String {
    let mut out = String::new();
    out.push_str("# irsmap path v1\n");
    out.push_str(&format!("# fingerprint: {}\n", map.fingerprint));
    out.push_str(&format!("# mode: {}\n", map.mode));
    out.push_str(&format!("# threshold_db: {:?}\n", path.threshold_db));
    out.push_str(&format!("# distance_m: {:?}\n", path.total_distance));
    out.push_str(&format!("# max_speed: {:?}\n", max_speed));
    out.push_str(&format!("# travel_time_s: {:?}\n", path.travel_time));
    out.push_str(&format!("# waypoints: {}\n", path.cells.len()));
    out.push_str("index,x,y,value_db,cum_dist_m\n");
    let mut cum = StepDistance::ZERO;
    for (idx, (&(i, j), w)) in path.cells.iter().zip(&path.waypoints).enumerate() {
        if idx > 0 {
            let prev = &path.cells[idx - 1];
            let kind = if prev.0 != i && prev.1 != j {
                StepKind::Diagonal
            } else {
                StepKind::Orthogonal
            };
            cum = cum.plus(kind);
        }
        let value = map.value(i, j);
        let value_str = if value.is_finite() {
            format!("{:?}", linear_to_db(value))
        } else {
            "-inf".to_string()
        };
        out.push_str(&format!(
            "{},{:?},{:?},{},{:?}\n",
            idx + 1,
            w.x,
            w.y,
            value_str,
            cum.meters(map.grid.delta)
        ));
    }
    out
}
