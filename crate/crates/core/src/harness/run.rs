//! The experiment pipeline: density, target, hit probability, horizon,
//! empirical law, prediction, comparison.

use std::time::Instant;

use log::{info, warn};

use crate::compound::total_variation;
use crate::counting::{EstimatorReport, HitProbability, SimulationSetup};
use crate::dynamics::MapSystem;
use crate::error::{Error, Result};
use crate::measure::{invariant_density, DensityModel};
use crate::rng::derive_seed;
use crate::targets::horizon;

use super::config::{parse_kv, ExperimentConfig, HitProbRoute, KeyValues, ScalingKind};
use super::presets::{PredictionContext, Preset, PresetRegistry};
use super::report::{Check, ComparisonReport};

/// Largest accepted `sum_{l >= 2} lambda_hat_l` when the limit is Poisson.
pub const POISSON_MULTIPLE_MASS: f64 = 0.05;

/// Steps spent making one stationary start.
fn start_cost(d: &DensityModel, burn_in: u64) -> f64 {
    match d {
        DensityModel::ExactLebesgue => 0.0,
        DensityModel::Histogram(_) => burn_in as f64,
        DensityModel::ProductDensity(a, b) => start_cost(a, burn_in) + start_cost(b, burn_in),
    }
}

/// Preset defaults with `overrides` applied and, if given, the seed replaced.
pub fn preset_config(
    registry: &PresetRegistry,
    name: &str,
    overrides: &KeyValues,
    seed: Option<u64>,
) -> Result<ExperimentConfig> {
    let mut cfg = registry.get(name)?.defaults().with_overrides(overrides)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Reads a config file's text: `preset` selects the defaults, every other
/// key overrides them.
pub fn load_config(registry: &PresetRegistry, text: &str) -> Result<ExperimentConfig> {
    let kv = parse_kv(text)?;
    let name = kv
        .get("preset")
        .ok_or_else(|| Error::Config("config file needs a `preset` key".into()))?;
    registry.get(name)?.defaults().with_overrides(&kv)
}

pub fn run_preset(
    registry: &PresetRegistry,
    name: &str,
    overrides: &KeyValues,
    seed: Option<u64>,
) -> Result<ComparisonReport> {
    run_experiment(registry, &preset_config(registry, name, overrides, seed)?)
}

pub fn build_density(cfg: &ExperimentConfig, map: &MapSystem) -> Result<DensityModel> {
    invariant_density(map, &cfg.density, derive_seed(cfg.seed, "density"))
}

pub fn run_experiment(registry: &PresetRegistry, cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let start = Instant::now();
    cfg.validate()?;
    let preset = registry.get(&cfg.preset)?;
    let map = cfg.build_map()?;
    let density = build_density(cfg, &map)?;
    let mut report = run_with_density(preset, cfg, &map, &density)?;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Target measure, estimated hit probability (empirical scaling only) and horizon.
pub fn horizon_for(
    cfg: &ExperimentConfig,
    map: &MapSystem,
    density: &DensityModel,
) -> Result<(f64, Option<HitProbability>, u64)> {
    let target = cfg.build_target()?;
    let mu = target.measure(density)?;
    let block = cfg.scaling.block;
    let hp = match cfg.scaling.kind {
        ScalingKind::Kac => None,
        ScalingKind::Empirical => {
            let ht = cfg.horizon_target()?;
            let hs = SimulationSetup::new(map, density, &ht)?.with_burn_in(cfg.burn_in);
            let seed = derive_seed(cfg.seed, "hitprob");
            let n = cfg.hitprob_trials;
            let cost = n as f64 * (block as f64 + start_cost(density, cfg.burn_in));
            check_budget(cost, cfg.max_steps)?;
            Some(match cfg.hitprob_route {
                HitProbRoute::Auto => hs.estimate_hit_prob_auto(block, n, seed)?,
                HitProbRoute::Direct => hs.estimate_hit_prob(block, n, seed)?,
                HitProbRoute::EntryTime => hs.estimate_hit_prob_entry_time(block, n, seed)?,
            })
        }
    };
    let n = horizon(&cfg.scaling.rule(), &target, density, hp.as_ref().map(|h| h.value))?;
    Ok((mu, hp, n))
}

fn check_budget(required: f64, budget: f64) -> Result<()> {
    if required > budget {
        Err(Error::BudgetExceeded { required, budget })
    } else {
        Ok(())
    }
}

/// Runs every stage after the density estimate.
pub fn run_with_density(
    preset: &dyn Preset,
    cfg: &ExperimentConfig,
    map: &MapSystem,
    density: &DensityModel,
) -> Result<ComparisonReport> {
    let start = Instant::now();
    let target = cfg.build_target()?;
    let setup = SimulationSetup::new(map, density, &target)?.with_burn_in(cfg.burn_in);
    let block = cfg.scaling.block;
    let mut notes = Vec::new();

    let (mu, hit_probability, n) = horizon_for(cfg, map, density)?;
    if block as f64 * mu > 0.1 {
        let msg = format!("L * mu(U) = {:.3} exceeds 0.1; blocks are not short against the return scale", block as f64 * mu);
        warn!("{msg}");
        notes.push(msg);
    }
    let per_start = start_cost(density, cfg.burn_in);
    let required = cfg.trials as f64 * (n as f64 + per_start)
        + cfg.lambda_trials as f64 * (block as f64 + per_start)
        + cfg.alpha_trials as f64 * block as f64;
    check_budget(required, cfg.max_steps)?;
    info!("{}: horizon {n}, about {required:.3e} steps", cfg.preset);

    let empirical = setup.w_distribution_at(n, cfg.trials, derive_seed(cfg.seed, "w"), cfg.k_max)?;
    let lambda = match setup.estimate_lambdas(block, cfg.lambda_trials, derive_seed(cfg.seed, "lambda"), cfg.ell_max) {
        Ok(l) => Some(l),
        Err(e @ Error::AllZero { .. }) => {
            notes.push(format!("cluster sizes unavailable: {e}"));
            None
        }
        Err(e) => return Err(e),
    };
    let alpha = setup.estimate_alpha_hat(block, cfg.alpha_trials, derive_seed(cfg.seed, "alpha"), cfg.ell_max)?;

    let ctx = PredictionContext { config: cfg, map, density, target: &target };
    let prediction = preset.predict(&ctx)?;
    let t_eff = prediction.intensity(cfg.scaling.kind, cfg.scaling.t);
    let law = prediction.law(t_eff);
    let predicted = law.pmf_table(cfg.k_max)?;
    let tv = total_variation(&empirical.table(), &predicted)?;

    let tol = &cfg.tolerances;
    let mut diagnostics = Vec::new();
    let mut checks = vec![
        Check::at_most("tv", tv, tol.tv),
        Check::within("extremal_index", alpha.extremal_index(), prediction.extremal_index, tol.extremal_index),
    ];
    if prediction.spectrum.len() == 1 {
        checks.push(Check::within("p_zero", empirical.probability(0), (-t_eff).exp(), tol.tv));
    }
    match &lambda {
        Some(l) => {
            if prediction.spectrum.len() == 1 {
                // A Poisson limit only constrains the mass of multiple hits;
                // near returns of the center leave a small bias at finite radius.
                checks.push(Check::at_most("lambda_multiple", 1.0 - l.lambda(1), POISSON_MULTIPLE_MASS));
            } else {
                for k in 1..=tol.lambda_terms.min(l.ell_max()) {
                    checks.push(Check::within_se(
                        format!("lambda_{k}"),
                        l.lambda(k),
                        prediction.spectrum.lambda(k),
                        l.lambda_se(k),
                        tol.lambda_sigmas,
                    ));
                }
            }
            // Identities between the two estimators hold only as L grows; a
            // cluster split by a block boundary biases them at short blocks.
            let from_alpha = alpha.spectrum().ok();
            for k in 1..=tol.lambda_terms.min(l.ell_max()).min(alpha.alpha.len()) {
                let c = match &from_alpha {
                    Some(s) => {
                        let se = (l.lambda_se(k).powi(2) + alpha.lambda_se(k).powi(2)).sqrt();
                        Check::within_se(format!("lambda_identity_{k}"), l.lambda(k), s.lambda(k), se, tol.lambda_sigmas)
                    }
                    None => Check::unavailable(format!("lambda_identity_{k}"), "extremal index estimate is zero"),
                };
                diagnostics.push(c);
            }
            let a1 = alpha.extremal_index();
            diagnostics.push(if a1 > 0.0 {
                Check::relative("mean_cluster_size", l.mean_cluster_size(), 1.0 / a1, 0.05)
            } else {
                Check::unavailable("mean_cluster_size", "extremal index estimate is zero")
            });
        }
        None => checks.push(Check::unavailable("lambda", "no block hit the target")),
    }

    Ok(ComparisonReport {
        config: cfg.clone(),
        target_measure: mu,
        hit_probability: hit_probability.clone(),
        horizon: n,
        empirical,
        law,
        predicted,
        prediction,
        tv,
        estimators: EstimatorReport { hit_probability, lambda, alpha: Some(alpha) },
        checks,
        diagnostics,
        notes,
        wall_time: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    })
}
