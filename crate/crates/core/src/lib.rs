//! Expected channel power gain radio maps for an indoor AP + IRS scene, and
//! minimum-distance robot path planning constrained by those maps.
//!
//! The pipeline:
//!
//! 1. [`scenario`] describes the scene: AP and IRS poses, box obstacles, the
//!    planning grid, channel parameters, and the IRS element layout.
//! 2. [`channel`] evaluates per-link Rician statistics and the closed-form
//!    expected effective channel power gain, with a sampler for Monte Carlo
//!    validation ([`montecarlo`]).
//! 3. [`phase`] picks optimal (or b-bit quantized) IRS phase shifts.
//! 4. [`radiomap`] evaluates the per-cell maximum expected gain over the
//!    grid and thresholds it into a feasibility mask.
//! 5. [`planner`] runs Dijkstra over the 8-connected feasible cells to find
//!    the shortest admissible path.

pub mod channel;
pub mod error;
pub mod fileio;
pub mod geometry;
pub mod montecarlo;
pub mod phase;
pub mod planner;
pub mod radiomap;
pub mod scenario;

pub use error::{Error, InfeasibleReason, Result};
pub use geometry::{GridSpec, ObstacleBox, Point3};
pub use radiomap::{build_map, feasible_map, FeasibleMap, MapMode, RadioMap};
pub use scenario::{IrsLayout, Scenario};
