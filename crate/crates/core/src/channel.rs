//! Location-dependent Rician channel model for the AP / IRS / robot links.
//!
//! Each link (AP-user, IRS-user, AP-IRS) has a path loss and a Rician factor
//! that depend on line-of-sight blockage: a blocked link degenerates to pure
//! Rayleigh fading (`K = 0`) with the NLoS path loss. The effective channel
//! seen by the user is the direct link plus the IRS-reflected cascade,
//!
//! ```text
//! c = conj(h) + r^H diag(phase factors per element) g,
//! ```
//!
//! and the quantity of interest is its expected power `E[|c|^2]`, which has a
//! closed form: the squared magnitude of the phase-aligned LoS part plus a
//! phase-independent diffuse floor
//!
//! ```text
//! tau = eta_am + eta_ai * eta_im * (K_im + K_ai + 1) * M,
//! ```
//!
//! where `eta = L / (K + 1)` is each link's diffuse power scale and `M` the
//! total element count. Note the AP-user term of the floor is `eta_am` and
//! the element-count factor is the full `M` (not the sub-surface count): both
//! follow from taking expectations of the five decomposed channel terms, and
//! the Monte Carlo suite checks them.
//!
//! LoS phases use exact per-element spherical wavefront distances; at desk
//! scale the panel's extent is comparable to the link distances, so a
//! plane-wave approximation would misalign the cascade.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{in_obstacle_footprint, segment_blocked, Point3};
use crate::scenario::Scenario;

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10 log10(v)`.
pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Indoor-factory (sparse clutter, high BS) LoS path loss in dB:
/// `31.84 + 21.5 log10(d) + 19 log10(fc_GHz)`.
pub fn path_loss_los_db(d: f64, fc: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance(d));
    }
    let fc_ghz = fc / 1e9;
    Ok(31.84 + 21.5 * d.log10() + 19.0 * fc_ghz.log10())
}

/// Indoor-factory NLoS path loss in dB, floored at the LoS value:
/// `max{LoS, 32.4 + 23 log10(d) + 20 log10(fc_GHz)}`.
pub fn path_loss_nlos_db(d: f64, fc: f64) -> Result<f64> {
    let los = path_loss_los_db(d, fc)?;
    let fc_ghz = fc / 1e9;
    Ok(los.max(32.4 + 23.0 * d.log10() + 20.0 * fc_ghz.log10()))
}

/// Per-link propagation statistics. Path loss is stored as a linear power
/// gain (< 1); dB appears only at I/O boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    /// Linear power gain of the link.
    pub path_loss: f64,
    /// Rician factor, linear scale; 0 for blocked links.
    pub rician_k: f64,
    /// Diffuse power scale `path_loss / (rician_k + 1)`.
    pub diffuse_scale: f64,
}

impl LinkStats {
    pub fn new(path_loss: f64, rician_k: f64) -> Self {
        Self {
            path_loss,
            rician_k,
            diffuse_scale: path_loss / (rician_k + 1.0),
        }
    }

    /// Amplitude scale of the deterministic LoS part, `sqrt(eta * K)`.
    pub fn los_amplitude(&self) -> f64 {
        (self.diffuse_scale * self.rician_k).sqrt()
    }
}

/// Which fixed endpoint a user link connects to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkEnd {
    Ap,
    Irs,
}

/// Link statistics for the user at `q` towards the AP or the IRS panel
/// center. Blockage decides LoS vs NLoS path loss and zeroes the Rician
/// factor.
pub fn link_stats(scene: &Scenario, q: &Point3, end: LinkEnd) -> Result<LinkStats> {
    if in_obstacle_footprint(&scene.obstacles, q) {
        return Err(Error::InfeasibleLocation { x: q.x, y: q.y });
    }
    let endpoint = match end {
        LinkEnd::Ap => scene.ap_pos,
        LinkEnd::Irs => scene.irs_pos,
    };
    Ok(stats_between(scene, q, &endpoint))
}

/// Link statistics of the fixed AP-IRS link (panel center reference).
pub fn ap_irs_stats(scene: &Scenario) -> LinkStats {
    stats_between(scene, &scene.ap_pos, &scene.irs_pos)
}

fn stats_between(scene: &Scenario, a: &Point3, b: &Point3) -> LinkStats {
    let d = a.distance(b);
    if segment_blocked(&scene.obstacles, a, b) {
        LinkStats::new(
            db_to_linear(-path_loss_nlos_db(d, scene.carrier_freq).expect("positive distance")),
            0.0,
        )
    } else {
        LinkStats::new(
            db_to_linear(-path_loss_los_db(d, scene.carrier_freq).expect("positive distance")),
            scene.rician_kappa,
        )
    }
}

/// Deterministic LoS part of the effective channel at one user location.
///
/// `direct` is the scaled AP-user LoS term; `cascade[n]` is the combined
/// AP-IRS-user composite for sub-surface `n` (the per-element cascade summed
/// over the sub-surface's block); `diffuse_floor` is the phase-independent
/// expected power of all diffuse terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LosChannel {
    pub direct: Complex64,
    pub cascade: Vec<Complex64>,
    pub diffuse_floor: f64,
}

impl LosChannel {
    /// Number of sub-surfaces.
    pub fn n_sub(&self) -> usize {
        self.cascade.len()
    }

    /// Expected gain under phase shifts that align every cascade term with
    /// the direct term: `(|direct| + sum_n |cascade[n]|)^2 + diffuse_floor`.
    /// No phase configuration exceeds this.
    pub fn peak_gain(&self) -> f64 {
        let aligned = self.direct.norm() + self.cascade.iter().map(|w| w.norm()).sum::<f64>();
        aligned * aligned + self.diffuse_floor
    }
}

/// Everything needed to evaluate or sample the channel at one user location:
/// per-link statistics plus unit-modulus per-element LoS phase vectors.
#[derive(Debug, Clone)]
pub struct ChannelContext {
    pub am: LinkStats,
    pub im: LinkStats,
    pub ai: LinkStats,
    /// AP-user LoS phasor.
    pub h_bar: Complex64,
    /// IRS-user per-element LoS phasors, sub-surface blocks contiguous.
    pub r_bar: Vec<Complex64>,
    /// AP-IRS per-element LoS phasors, same ordering.
    pub g_bar: Vec<Complex64>,
    pub n_sub: usize,
    pub per_sub: usize,
}

impl ChannelContext {
    pub fn new(scene: &Scenario, q: &Point3) -> Result<Self> {
        let am = link_stats(scene, q, LinkEnd::Ap)?;
        let im = link_stats(scene, q, LinkEnd::Irs)?;
        let ai = ap_irs_stats(scene);
        let wavenumber = 2.0 * std::f64::consts::PI / scene.wavelength();
        let phasor = |d: f64| Complex64::from_polar(1.0, -wavenumber * d);

        let positions = scene.irs_element_positions();
        let r_bar = positions.iter().map(|p| phasor(p.distance(q))).collect();
        let g_bar = positions
            .iter()
            .map(|p| phasor(p.distance(&scene.ap_pos)))
            .collect();

        Ok(Self {
            am,
            im,
            ai,
            h_bar: phasor(scene.ap_pos.distance(q)),
            r_bar,
            g_bar,
            n_sub: scene.irs_layout.n_sub(),
            per_sub: scene.irs_layout.per_sub(),
        })
    }

    pub fn total_elements(&self) -> usize {
        self.n_sub * self.per_sub
    }

    /// Collapse the per-element cascade into the per-sub-surface LoS channel.
    pub fn los_channel(&self) -> LosChannel {
        let m = self.total_elements();
        let direct = self.am.los_amplitude() * self.h_bar;
        let cascade_scale = self.im.los_amplitude() * self.ai.los_amplitude();
        let cascade = (0..self.n_sub)
            .map(|n| {
                let block = n * self.per_sub..(n + 1) * self.per_sub;
                // Row-vector entries conj(r) * g, summed over the block;
                // stored conjugated so evaluation mirrors the direct term.
                let row_sum: Complex64 = block
                    .map(|k| self.r_bar[k].conj() * self.g_bar[k])
                    .sum();
                cascade_scale * row_sum.conj()
            })
            .collect();
        let diffuse_floor = self.am.diffuse_scale
            + self.ai.diffuse_scale
                * self.im.diffuse_scale
                * (self.im.rician_k + self.ai.rician_k + 1.0)
                * m as f64;
        LosChannel {
            direct,
            cascade,
            diffuse_floor,
        }
    }

    /// Draw one realization of the effective channel for the given
    /// per-sub-surface phase factors `e^{j theta_n}`.
    pub fn sample_with_factors(
        &self,
        phase_factors: &[Complex64],
        rng: &mut impl Rng,
    ) -> Complex64 {
        debug_assert_eq!(phase_factors.len(), self.n_sub);
        let sqrt_eta_am = self.am.diffuse_scale.sqrt();
        let sqrt_k_am = self.am.rician_k.sqrt();
        let sqrt_eta_im = self.im.diffuse_scale.sqrt();
        let sqrt_k_im = self.im.rician_k.sqrt();
        let sqrt_eta_ai = self.ai.diffuse_scale.sqrt();
        let sqrt_k_ai = self.ai.rician_k.sqrt();

        let h = sqrt_eta_am * (sqrt_k_am * self.h_bar + cscg(rng));
        let mut c = h.conj();
        for (n, factor) in phase_factors.iter().enumerate() {
            let mut block_sum = Complex64::new(0.0, 0.0);
            for k in n * self.per_sub..(n + 1) * self.per_sub {
                let r = sqrt_eta_im * (sqrt_k_im * self.r_bar[k] + cscg(rng));
                let g = sqrt_eta_ai * (sqrt_k_ai * self.g_bar[k] + cscg(rng));
                block_sum += r.conj() * g;
            }
            c += factor * block_sum;
        }
        c
    }
}

/// Circularly-symmetric complex Gaussian with unit variance.
fn cscg(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// LoS channel components at a user location.
pub fn los_components(scene: &Scenario, q: &Point3) -> Result<LosChannel> {
    Ok(ChannelContext::new(scene, q)?.los_channel())
}

/// Expected effective channel power gain for the given sub-surface phase
/// shifts (radians): `|conj(direct) + sum_n conj(cascade[n]) e^{j theta_n}|^2`
/// plus the diffuse floor.
pub fn expected_gain(los: &LosChannel, shifts: &[f64]) -> Result<f64> {
    if shifts.len() != los.cascade.len() {
        return Err(Error::ShapeMismatch {
            expected: los.cascade.len(),
            got: shifts.len(),
        });
    }
    let mut s = los.direct.conj();
    for (w, &theta) in los.cascade.iter().zip(shifts) {
        s += w.conj() * Complex64::from_polar(1.0, theta);
    }
    Ok(s.norm_sqr() + los.diffuse_floor)
}

/// Draw one effective-channel realization, deterministically from `seed`.
pub fn sample_effective_channel(
    ctx: &ChannelContext,
    shifts: &[f64],
    seed: u64,
) -> Result<Complex64> {
    if shifts.len() != ctx.n_sub {
        return Err(Error::ShapeMismatch {
            expected: ctx.n_sub,
            got: shifts.len(),
        });
    }
    let factors: Vec<Complex64> = shifts
        .iter()
        .map(|&t| Complex64::from_polar(1.0, t))
        .collect();
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    Ok(ctx.sample_with_factors(&factors, &mut rng))
}
