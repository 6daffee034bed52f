//! Monte Carlo laboratory for hitting-time statistics of expanding interval maps.
//!
//! Orbits of the doubling map, a smooth perturbation of it, the intermittent
//! Pomeau-Manneville map and products of these are counted against shrinking
//! targets. The empirical laws of the hit count are compared with Poisson,
//! Polya-Aeppli and general compound Poisson predictions built from
//! first-principles cluster spectra.
//!
//! Module map:
//!
//! * [`dynamics`]: maps, orbit states, periodic points, parabolic levels;
//! * [`measure`]: invariant density models;
//! * [`targets`]: target families, their measures and the horizon rule;
//! * [`counting`]: hit counting and the cluster estimators;
//! * [`compound`]: spectra and compound laws;
//! * [`harness`]: configs, presets, sweeps, reports and emitters.

pub mod compound;
pub mod counting;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod measure;
pub mod rng;
mod stats;
pub mod targets;

pub use error::{Error, Result};
pub use stats::linear_fit;
