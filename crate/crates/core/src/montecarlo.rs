//! Deterministic Monte Carlo estimation of the expected effective channel
//! power gain, used to validate the closed-form expression.
//!
//! Sampling is split into fixed-size batches, each driven by its own ChaCha
//! stream derived from the caller's seed, and batch results are reduced in
//! batch order. The estimate is therefore bit-identical for a given seed
//! regardless of thread count.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::ChannelContext;
use crate::error::{Error, Result};
use crate::geometry::{in_obstacle_footprint, segment_blocked, Point3};
use crate::scenario::Scenario;

const BATCH: u64 = 1 << 14;

/// Sample mean of `|c|^2` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl GainEstimate {
    /// Absolute deviation from `reference` in units of the standard error.
    pub fn sigmas_from(&self, reference: f64) -> f64 {
        (self.mean - reference).abs() / self.std_error
    }

    pub fn relative_error(&self, reference: f64) -> f64 {
        ((self.mean - reference) / reference).abs()
    }
}

/// Estimate the expected gain at the given phase shifts from `samples`
/// independent channel realizations.
pub fn estimate_gain(
    ctx: &ChannelContext,
    shifts: &[f64],
    samples: u64,
    seed: u64,
) -> Result<GainEstimate> {
    if shifts.len() != ctx.n_sub {
        return Err(Error::ShapeMismatch {
            expected: ctx.n_sub,
            got: shifts.len(),
        });
    }
    if samples < 2 {
        return Err(Error::Config(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let factors: Vec<Complex64> = shifts
        .iter()
        .map(|&t| Complex64::from_polar(1.0, t))
        .collect();

    let batches = samples.div_ceil(BATCH);
    let partials: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b + 1);
            let count = BATCH.min(samples - b * BATCH);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..count {
                let p = ctx.sample_with_factors(&factors, &mut rng).norm_sqr();
                sum += p;
                sum_sq += p * p;
            }
            (sum, sum_sq)
        })
        .collect();

    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), &(s, s2)| (a + s, b + s2));
    let n = samples as f64;
    let mean = sum / n;
    let variance = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(GainEstimate {
        mean,
        std_error: (variance / n).sqrt(),
        samples,
    })
}

/// A labelled grid cell used by the validation suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeCell {
    pub label: &'static str,
    pub cell: (usize, usize),
}

/// Deterministic probe cells covering the blockage cases: first cell (in
/// row-major scan order) with both links clear, with only the AP link
/// blocked, with both links blocked, and the non-obstacle cell closest to
/// the IRS. Categories absent from the scene are omitted.
pub fn select_probe_cells(scene: &Scenario) -> Vec<ProbeCell> {
    let grid = &scene.grid;
    let mut los = None;
    let mut nlos_direct = None;
    let mut nlos_both = None;
    let mut near_irs: Option<((usize, usize), f64)> = None;

    for i in 1..=grid.nx {
        for j in 1..=grid.ny {
            let q = grid.cell_center(i, j).expect("cell in range");
            if in_obstacle_footprint(&scene.obstacles, &q) {
                continue;
            }
            let ap_blocked = segment_blocked(&scene.obstacles, &q, &scene.ap_pos);
            let irs_blocked = segment_blocked(&scene.obstacles, &q, &scene.irs_pos);
            match (ap_blocked, irs_blocked) {
                (false, false) if los.is_none() => los = Some((i, j)),
                (true, false) if nlos_direct.is_none() => nlos_direct = Some((i, j)),
                (true, true) if nlos_both.is_none() => nlos_both = Some((i, j)),
                _ => {}
            }
            let d = q.distance(&irs_center_at_height(scene, q.z));
            if near_irs.is_none_or(|(_, best)| d < best) {
                near_irs = Some(((i, j), d));
            }
        }
    }

    let mut probes = Vec::new();
    if let Some(cell) = los {
        probes.push(ProbeCell { label: "los", cell });
    }
    if let Some(cell) = nlos_direct {
        probes.push(ProbeCell {
            label: "nlos_direct",
            cell,
        });
    }
    if let Some(cell) = nlos_both {
        probes.push(ProbeCell {
            label: "nlos_both",
            cell,
        });
    }
    if let Some((cell, _)) = near_irs {
        probes.push(ProbeCell {
            label: "near_irs",
            cell,
        });
    }
    probes
}

/// Horizontal projection of the IRS center at the robot's height, used to
/// rank cells by panel proximity.
fn irs_center_at_height(scene: &Scenario, z: f64) -> Point3 {
    Point3::new(scene.irs_pos.x, scene.irs_pos.y, z)
}
