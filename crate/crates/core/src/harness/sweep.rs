//! Convergence sweeps over the target radius or the parabolic level.

use std::fmt::Write as _;
use std::time::Instant;

use crate::counting::HitProbability;
use crate::error::{Error, Result};
use crate::stats::linear_fit;

use super::config::{ExperimentConfig, MapSpec, SweepSpec};
use super::presets::PresetRegistry;
use super::report::{Check, ComparisonReport};
use super::run::{build_density, horizon_for, run_with_density};

#[derive(Clone, Debug)]
pub struct SweepPoint {
    /// Radius or level of this point.
    pub value: f64,
    pub config: ExperimentConfig,
    pub target_measure: f64,
    pub hit_probability: Option<HitProbability>,
    pub horizon: u64,
    /// Absent in horizon-only sweeps.
    pub report: Option<ComparisonReport>,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    /// Ordered toward the limit: radii decreasing, levels increasing.
    pub points: Vec<SweepPoint>,
    /// TV never increases along the sweep (full runs only).
    pub tv_nonincreasing: Option<bool>,
    /// Fitted slope of `log N` against `log n` (level sweeps only).
    pub slope: Option<f64>,
    pub checks: Vec<Check>,
    pub wall_time: f64,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
            && self.points.iter().all(|p| p.report.as_ref().is_none_or(ComparisonReport::passed))
    }

    /// One row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,target_measure,p_hat,p_hat_stderr,horizon,tv,extremal_index,passed\n");
        for p in &self.points {
            let (ph, se) = p.hit_probability.as_ref().map_or((f64::NAN, f64::NAN), |h| (h.value, h.std_error));
            let (tv, ei, ok) = match &p.report {
                Some(r) => (
                    r.tv.to_string(),
                    r.estimators.extremal_index().map_or(String::new(), |e| e.to_string()),
                    r.passed().to_string(),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            let _ = writeln!(out, "{},{},{ph},{se},{},{tv},{ei},{ok}", p.value, p.target_measure, p.horizon);
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sweep of preset {} over {} points", self.config.preset, self.points.len());
        for p in &self.points {
            let _ = write!(s, "  {:<12} mu {:.4e}  N {:>12}", p.value, p.target_measure, p.horizon);
            if let Some(r) = &p.report {
                let _ = write!(s, "  TV {:.5}  {}", r.tv, if r.passed() { "PASS" } else { "FAIL" });
            }
            let _ = writeln!(s);
        }
        if let Some(m) = self.tv_nonincreasing {
            let _ = writeln!(s, "TV nonincreasing: {m}");
        }
        if let Some(sl) = self.slope {
            let _ = writeln!(s, "slope of log N vs log n: {sl:.4}");
        }
        for c in &self.checks {
            let _ = writeln!(s, "  {}", c.line());
        }
        let _ = writeln!(s, "result: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

pub fn run_sweep(registry: &PresetRegistry, cfg: &ExperimentConfig) -> Result<SweepReport> {
    let start = Instant::now();
    cfg.validate()?;
    let spec = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("sweep needs sweep.param and sweep.values".into()))?;
    let preset = registry.get(&cfg.preset)?;
    let map = cfg.build_map()?;
    let density = build_density(cfg, &map)?;

    let mut values: Vec<f64> = match &spec {
        SweepSpec::Rho(v) => v.clone(),
        SweepSpec::Level(v) => v.iter().map(|&n| n as f64).collect(),
    };
    match spec {
        SweepSpec::Rho(_) => values.sort_by(|a, b| b.total_cmp(a)),
        SweepSpec::Level(_) => values.sort_by(|a, b| a.total_cmp(b)),
    }

    let mut points = Vec::new();
    for &v in &values {
        let mut c = cfg.clone();
        c.sweep = None;
        c.target = match spec {
            SweepSpec::Rho(_) => cfg.target.with_rho(v)?,
            SweepSpec::Level(_) => cfg.target.with_level(v as usize)?,
        };
        let point = if cfg.sweep_horizon_only {
            let (mu, hp, n) = horizon_for(&c, &map, &density)?;
            SweepPoint { value: v, config: c, target_measure: mu, hit_probability: hp, horizon: n, report: None }
        } else {
            let r = run_with_density(preset, &c, &map, &density)?;
            SweepPoint {
                value: v,
                config: c,
                target_measure: r.target_measure,
                hit_probability: r.hit_probability.clone(),
                horizon: r.horizon,
                report: Some(r),
            }
        };
        points.push(point);
    }

    let tv_nonincreasing = if cfg.sweep_horizon_only {
        None
    } else {
        let tvs: Vec<f64> = points.iter().filter_map(|p| p.report.as_ref().map(|r| r.tv)).collect();
        Some(tvs.windows(2).all(|w| w[1] <= w[0]))
    };
    let mut checks = Vec::new();
    let slope = match spec {
        SweepSpec::Level(_) => {
            let x: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
            let y: Vec<f64> = points.iter().map(|p| (p.horizon as f64).ln()).collect();
            let slope = linear_fit(&x, &y).map(|(s, _)| s);
            if let (Some(s), MapSpec::Pm { alpha }) = (slope, &cfg.map) {
                checks.push(Check::within("horizon_slope", s, 1.0 / alpha, cfg.tolerances.slope));
            }
            slope
        }
        SweepSpec::Rho(_) => None,
    };

    Ok(SweepReport {
        config: cfg.clone(),
        points,
        tv_nonincreasing,
        slope,
        checks,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
