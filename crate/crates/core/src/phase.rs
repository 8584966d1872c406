//! IRS phase-shift selection: closed-form optimal continuous shifts, b-bit
//! quantization, and the resulting expected gain.
//!
//! Quantization uses the circular (wrap-around) distance on the phase circle,
//! so an optimal shift just below `2*pi` snaps to level 0 rather than to the
//! topmost level. Exact ties break toward the smaller level index.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::channel::{expected_gain, LosChannel};
use crate::error::{Error, Result};

/// Phase resolution of the IRS phase shifters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseResolution {
    Continuous,
    /// `L` uniformly spaced levels `{0, 2*pi/L, ..., (L-1) 2*pi/L}`.
    Discrete(u32),
}

/// Per-sub-surface phase shifts in `[0, 2*pi)`. Attenuation is fixed to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub shifts: Vec<f64>,
    pub resolution: PhaseResolution,
}

/// Optimal continuous shifts: rotate every cascade term onto the direct
/// term's phase. With a blocked direct link the cascade aligns to phase 0;
/// zero-magnitude cascade entries get shift 0 (any value is gain-neutral).
pub fn optimal_phases(los: &LosChannel) -> PhaseConfig {
    let zero = Complex64::new(0.0, 0.0);
    let reference = if los.direct == zero {
        0.0
    } else {
        los.direct.conj().arg()
    };
    let shifts = los
        .cascade
        .iter()
        .map(|w| {
            if *w == zero {
                0.0
            } else {
                wrap(reference - w.conj().arg())
            }
        })
        .collect();
    PhaseConfig {
        shifts,
        resolution: PhaseResolution::Continuous,
    }
}

/// Snap each shift to the nearest of `levels` uniform phase levels under the
/// circular distance.
pub fn quantize_phases(config: &PhaseConfig, levels: u32) -> Result<PhaseConfig> {
    if levels < 2 {
        return Err(Error::BadLevels(levels));
    }
    let shifts = config
        .shifts
        .iter()
        .map(|&t| quantize_angle(t, levels))
        .collect();
    Ok(PhaseConfig {
        shifts,
        resolution: PhaseResolution::Discrete(levels),
    })
}

/// Expected gain achieved at the given resolution: the closed-form peak for
/// continuous shifters, otherwise the gain at the quantized optimal shifts.
pub fn achieved_gain(los: &LosChannel, resolution: PhaseResolution) -> Result<f64> {
    match resolution {
        PhaseResolution::Continuous => Ok(los.peak_gain()),
        PhaseResolution::Discrete(levels) => {
            let quantized = quantize_phases(&optimal_phases(los), levels)?;
            expected_gain(los, &quantized.shifts)
        }
    }
}

fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t == TAU {
        0.0
    } else {
        t
    }
}

fn quantize_angle(theta: f64, levels: u32) -> f64 {
    let step = TAU / levels as f64;
    let t = wrap(theta);
    let k_lo = ((t / step).floor() as i64).clamp(0, levels as i64 - 1) as u32;
    let k_hi = (k_lo + 1) % levels;
    let d_lo = circular_distance(t, k_lo as f64 * step);
    let d_hi = circular_distance(t, k_hi as f64 * step);
    let k = if d_lo < d_hi {
        k_lo
    } else if d_hi < d_lo {
        k_hi
    } else {
        k_lo.min(k_hi)
    };
    k as f64 * step
}

/// Wrap-around distance between two angles in `[0, 2*pi)`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(TAU - d)
}
