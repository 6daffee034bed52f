//! Named experiment presets.
//!
//! A preset supplies default settings and a first-principles prediction of
//! the cluster spectrum. Presets live in a registry keyed by name so the CLI
//! and config files can select them at run time.

use std::collections::BTreeMap;

use crate::compound::{
    estimate_gamma, finite_periodic_spectrum, product_strip_spectrum, ClusterSpectrum, CompoundLaw,
    GammaTable,
};
use crate::dynamics::MapSystem;
use crate::error::{Error, Result};
use crate::measure::DensityModel;
use crate::rng::derive_seed;
use crate::targets::TargetFamily;

use super::config::{ExperimentConfig, MapSpec, ScalingKind, TargetSpec, Tolerances};

/// Inputs available to a prediction.
pub struct PredictionContext<'a> {
    pub config: &'a ExperimentConfig,
    pub map: &'a MapSystem,
    pub density: &'a DensityModel,
    pub target: &'a TargetFamily,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LawShape {
    Poisson,
    PolyaAeppli { theta: f64 },
    General,
}

/// Predicted extremal index and cluster spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub extremal_index: f64,
    pub spectrum: ClusterSpectrum,
    pub shape: LawShape,
    pub notes: Vec<String>,
}

impl Prediction {
    /// Limit law with intensity `t`.
    pub fn law(&self, t: f64) -> CompoundLaw {
        match self.shape {
            LawShape::Poisson => CompoundLaw::Poisson { t },
            LawShape::PolyaAeppli { theta } => CompoundLaw::PolyaAeppli { t, theta },
            LawShape::General => CompoundLaw::CompoundPoisson { t, spectrum: self.spectrum.clone() },
        }
    }

    /// Intensity of the predicted law under a scaling rule: `t` when the
    /// horizon is set from the observed block hit rate, `alpha_1 t` under Kac
    /// scaling (the cluster rate per unit of `mu(U) N`).
    pub fn intensity(&self, kind: ScalingKind, t: f64) -> f64 {
        match kind {
            ScalingKind::Empirical => t,
            ScalingKind::Kac => self.extremal_index * t,
        }
    }
}

pub trait Preset: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn defaults(&self) -> ExperimentConfig;
    fn predict(&self, ctx: &PredictionContext) -> Result<Prediction>;
}

/// Presets by name.
pub struct PresetRegistry {
    presets: BTreeMap<&'static str, Box<dyn Preset>>,
}

impl PresetRegistry {
    pub fn empty() -> Self {
        PresetRegistry { presets: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(PeriodicSingle));
        r.register(Box::new(NonPeriodic));
        r.register(Box::new(FinitePeriodicSet));
        r.register(Box::new(ProductStrip));
        r.register(Box::new(ProductStripHalfInterval));
        r.register(Box::new(Parabolic));
        r
    }

    pub fn register(&mut self, p: Box<dyn Preset>) {
        self.presets.insert(p.name(), p);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Preset> {
        self.presets
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::Unknown { kind: "preset", name: name.into() })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.presets.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Preset> + '_ {
        self.presets.values().map(|b| b.as_ref())
    }
}

/// Poisson for a non-periodic center, Polya-Aeppli with the Pitskel value for a periodic one.
fn single_point(ctx: &PredictionContext, center: f64) -> Result<Prediction> {
    let c = ctx.config;
    match ctx.map.minimal_period(center, c.max_period, c.period_tol) {
        Some(p) => {
            let theta = ctx.map.pitskel_value(center, p, c.period_tol)?;
            Ok(Prediction {
                extremal_index: 1.0 - theta,
                spectrum: ClusterSpectrum::geometric(theta, c.spectrum_len)?,
                shape: LawShape::PolyaAeppli { theta },
                notes: vec![format!("center has minimal period {p}, theta = {theta}")],
            })
        }
        None => Ok(Prediction {
            extremal_index: 1.0,
            spectrum: ClusterSpectrum::singleton(),
            shape: LawShape::Poisson,
            notes: vec![format!("no period up to {} found for the center", c.max_period)],
        }),
    }
}

fn ball_center(ctx: &PredictionContext) -> Result<f64> {
    match ctx.config.target {
        TargetSpec::Ball { center, .. } => Ok(center),
        _ => Err(Error::Config(format!("preset `{}` needs target.kind=ball", ctx.config.preset))),
    }
}

struct PeriodicSingle;

impl Preset for PeriodicSingle {
    fn name(&self) -> &'static str {
        "periodic_single"
    }

    fn summary(&self) -> &'static str {
        "doubling map, ball around the period-2 point 1/3"
    }

    fn defaults(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::base(self.name());
        c.target = TargetSpec::Ball { center: 1.0 / 3.0, rho: 2f64.powi(-16), wrap: false };
        c.scaling.block = 256;
        c
    }

    fn predict(&self, ctx: &PredictionContext) -> Result<Prediction> {
        single_point(ctx, ball_center(ctx)?)
    }
}

struct NonPeriodic;

impl Preset for NonPeriodic {
    fn name(&self) -> &'static str {
        "nonperiodic"
    }

    fn summary(&self) -> &'static str {
        "doubling map, ball around sqrt(2) - 1"
    }

    fn defaults(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::base(self.name());
        c.target = TargetSpec::Ball { center: 2f64.sqrt() - 1.0, rho: 2f64.powi(-16), wrap: false };
        c.scaling.block = 256;
        c
    }

    fn predict(&self, ctx: &PredictionContext) -> Result<Prediction> {
        single_point(ctx, ball_center(ctx)?)
    }
}

struct FinitePeriodicSet;

impl Preset for FinitePeriodicSet {
    fn name(&self) -> &'static str {
        "finite_periodic_set"
    }

    fn summary(&self) -> &'static str {
        "doubling map, balls around the fixed point 0 and the period-2 point 1/3"
    }

    fn defaults(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::base(self.name());
        c.target = TargetSpec::Union { centers: vec![0.0, 1.0 / 3.0], rho: 2f64.powi(-18), wrap: true };
        c.scaling.block = 256;
        c.lambda_trials = 2_000_000;
        c
    }

    /// Each ball is weighted by its own measure, which equals the density at
    /// the center for interior balls and accounts for clipping at the ends.
    fn predict(&self, ctx: &PredictionContext) -> Result<Prediction> {
        let TargetSpec::Union { centers, rho, wrap } = &ctx.config.target else {
            return Err(Error::Config("finite_periodic_set needs target.kind=union".into()));
        };
        let c = ctx.config;
        let mut thetas = Vec::new();
        let mut weights = Vec::new();
        let mut notes = Vec::new();
        for &x in centers {
            let p = ctx
                .map
                .minimal_period(x, c.max_period, c.period_tol)
                .ok_or(Error::NotPeriodic { x, period: c.max_period, tol: c.period_tol })?;
            let theta = ctx.map.pitskel_value(x, p, c.period_tol)?;
            let ball = TargetFamily::ball(x, *rho, *wrap)?;
            let w = ball.measure(ctx.density)?;
            notes.push(format!("center {x}: period {p}, theta {theta}, ball measure {w:e}"));
            thetas.push(theta);
            weights.push(w);
        }
        let (extremal_index, spectrum) = finite_periodic_spectrum(&thetas, &weights, c.spectrum_len)?;
        Ok(Prediction { extremal_index, spectrum, shape: LawShape::General, notes })
    }
}

fn strip_params<'a>(ctx: &PredictionContext<'a>) -> Result<(f64, f64, f64, &'a MapSystem, &'a MapSystem)> {
    let TargetSpec::Strip { x, a, b, .. } = ctx.config.target else {
        return Err(Error::Config(format!("preset `{}` needs target.kind=strip", ctx.config.preset)));
    };
    let MapSystem::Product(m1, m2) = ctx.map else {
        return Err(Error::Config("strip presets need map.family=product".into()));
    };
    Ok((x, a, b, m1, m2))
}

fn strip_theta(ctx: &PredictionContext, m1: &MapSystem, x: f64) -> Result<(usize, f64)> {
    let c = ctx.config;
    let p = m1
        .minimal_period(x, c.max_period, c.period_tol)
        .ok_or(Error::NotPeriodic { x, period: c.max_period, tol: c.period_tol })?;
    Ok((p, m1.pitskel_value(x, p, c.period_tol)?))
}

struct ProductStrip;

impl Preset for ProductStrip {
    fn name(&self) -> &'static str {
        "product_strip"
    }

    fn summary(&self) -> &'static str {
        "doubling x perturbed map, strip {1/3} x [1/4, 3/4]; return law estimated"
    }

    fn defaults(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::base(self.name());
        c.map = MapSpec::Product(Box::new(MapSpec::Doubling), Box::new(MapSpec::Perturbed { eps: 0.1 }));
        c.target = TargetSpec::Strip { x: 1.0 / 3.0, a: 0.25, b: 0.75, rho: 2f64.powi(-12) };
        c.scaling.block = 64;
        c.density.orbit_length = 20_000_000;
        c
    }

    /// Gamma table from conditional returns of the second coordinate under
    /// `T_2^p`, fed into the strip spectrum.
    fn predict(&self, ctx: &PredictionContext) -> Result<Prediction> {
        let (x, a, b, m1, m2) = strip_params(ctx)?;
        let (p, theta) = strip_theta(ctx, m1, x)?;
        let (_, d2) = ctx
            .density
            .components()
            .ok_or_else(|| Error::DimensionMismatch("strip needs a product density".into()))?;
        let c = ctx.config;
        let k_max = c.spectrum_len.min(24);
        let table = estimate_gamma(
            m2,
            d2,
            p,
            (a, b),
            k_max,
            c.gamma_i_max,
            c.gamma_draws,
            derive_seed(c.seed, "gamma"),
        )?;
        strip_prediction(theta, p, &table)
    }
}

fn strip_prediction(theta: f64, p: usize, table: &GammaTable) -> Result<Prediction> {
    let s = product_strip_spectrum(theta, table)?;
    Ok(Prediction {
        extremal_index: s.extremal_index,
        spectrum: s.spectrum,
        shape: LawShape::General,
        notes: vec![format!(
            "x has period {p}, theta {theta}; gamma table {}x{}, truncation bound {:e}",
            table.k_max(),
            table.i_max(),
            s.truncation_bound
        )],
    })
}

/// `gamma_k(i) = C(i-1, k-1) 2^-i`: under any power of the doubling map the
/// returns to `[0, 1/2]` are fair coin flips.
pub fn halving_gamma_table(k_max: usize, i_max: usize) -> GammaTable {
    let rows = (1..=k_max)
        .map(|k| {
            (0..=i_max)
                .map(|i| {
                    if i < k {
                        return 0.0;
                    }
                    let ln_c: f64 = (0..k - 1).map(|j| ((i - 1 - j) as f64).ln() - ((j + 1) as f64).ln()).sum();
                    (ln_c - i as f64 * std::f64::consts::LN_2).exp()
                })
                .collect()
        })
        .collect();
    GammaTable::from_rows(rows).expect("rectangular table")
}

struct ProductStripHalfInterval;

impl Preset for ProductStripHalfInterval {
    fn name(&self) -> &'static str {
        "product_strip_halfinterval"
    }

    fn summary(&self) -> &'static str {
        "doubling x doubling, strip {1/3} x [0, 1/2]; return law in closed form"
    }

    fn defaults(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::base(self.name());
        c.map = MapSpec::Product(Box::new(MapSpec::Doubling), Box::new(MapSpec::Doubling));
        c.target = TargetSpec::Strip { x: 1.0 / 3.0, a: 0.0, b: 0.5, rho: 2f64.powi(-10) };
        c.scaling.block = 32;
        c
    }

    fn predict(&self, ctx: &PredictionContext) -> Result<Prediction> {
        let (x, a, b, m1, m2) = strip_params(ctx)?;
        if *m2 != MapSystem::Doubling || a != 0.0 || b != 0.5 {
            return Err(Error::Config(
                "product_strip_halfinterval needs a doubling second factor and [a, b] = [0, 1/2]".into(),
            ));
        }
        let (p, theta) = strip_theta(ctx, m1, x)?;
        let c = ctx.config;
        let table = halving_gamma_table(c.spectrum_len.min(40), c.gamma_i_max.max(64));
        strip_prediction(theta, p, &table)
    }
}

struct Parabolic;

impl Preset for Parabolic {
    fn name(&self) -> &'static str {
        "parabolic"
    }

    fn summary(&self) -> &'static str {
        "intermittent map, level sets [0, a_n] at the neutral fixed point"
    }

    fn defaults(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::base(self.name());
        c.map = MapSpec::Pm { alpha: 0.25 };
        c.target = TargetSpec::ParabolicLevel { n: 100 };
        c.scaling.block = 1024;
        c.trials = 2_000;
        c.lambda_trials = 20_000;
        c.alpha_trials = 2_000;
        c.hitprob_trials = 20_000;
        c.tolerances = Tolerances { extremal_index: 0.05, ..c.tolerances.clone() };
        c
    }

    /// Clusters at the neutral point grow without bound as the level deepens,
    /// so every fixed cluster size loses its mass: Poisson, extremal index 0.
    fn predict(&self, ctx: &PredictionContext) -> Result<Prediction> {
        if ctx.target.parabolic().is_none() {
            return Err(Error::Config("parabolic preset needs a parabolic target".into()));
        }
        Ok(Prediction {
            extremal_index: 0.0,
            spectrum: ClusterSpectrum::singleton(),
            shape: LawShape::Poisson,
            notes: vec![format!(
                "horizon from the annulus of width K = {}",
                ctx.config.annulus_width()
            )],
        })
    }
}
