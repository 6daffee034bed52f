//! Comparison reports and their text forms.

use std::fmt::Write as _;

use crate::compound::{CompoundLaw, PmfTable};
use crate::counting::{EmpiricalDistribution, EstimatorReport, HitProbability};

use super::config::ExperimentConfig;
use super::presets::Prediction;

/// One pass/fail row, with the tolerance it was judged against.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    /// Human-readable acceptance rule, e.g. `|obs - exp| <= 0.02`.
    pub tolerance: String,
    pub passed: bool,
}

/// Fixed notation for ordinary magnitudes, scientific for tiny or huge ones.
fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-3..1e6).contains(&a) {
        format!("{x:.6}")
    } else {
        format!("{x:.3e}")
    }
}

impl Check {
    /// `|observed - expected| <= tol`.
    pub fn within(name: impl Into<String>, observed: f64, expected: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            observed,
            expected,
            tolerance: format!("|obs - exp| <= {}", num(tol)),
            passed: (observed - expected).abs() <= tol,
        }
    }

    /// `observed <= bound`.
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            observed,
            expected: bound,
            tolerance: format!("obs <= {}", num(bound)),
            passed: observed <= bound,
        }
    }

    /// `|observed - expected| <= sigmas * se`.
    pub fn within_se(name: impl Into<String>, observed: f64, expected: f64, se: f64, sigmas: f64) -> Self {
        Check {
            name: name.into(),
            observed,
            expected,
            tolerance: format!("|obs - exp| <= {sigmas} x {se:.3e}"),
            passed: (observed - expected).abs() <= sigmas * se,
        }
    }

    /// `|observed / expected - 1| <= rel`.
    pub fn relative(name: impl Into<String>, observed: f64, expected: f64, rel: f64) -> Self {
        Check {
            name: name.into(),
            observed,
            expected,
            tolerance: format!("|obs / exp - 1| <= {}", num(rel)),
            passed: expected != 0.0 && (observed / expected - 1.0).abs() <= rel,
        }
    }

    /// A check that could not be evaluated.
    pub fn unavailable(name: impl Into<String>, why: &str) -> Self {
        Check {
            name: name.into(),
            observed: f64::NAN,
            expected: f64::NAN,
            tolerance: format!("not evaluated: {why}"),
            passed: false,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: observed {} expected {} [{}]",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            num(self.observed),
            num(self.expected),
            self.tolerance
        )
    }
}

/// Outcome of one experiment.
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub config: ExperimentConfig,
    pub target_measure: f64,
    pub hit_probability: Option<HitProbability>,
    pub horizon: u64,
    pub empirical: EmpiricalDistribution,
    pub law: CompoundLaw,
    pub predicted: PmfTable,
    pub prediction: Prediction,
    pub tv: f64,
    pub estimators: EstimatorReport,
    pub checks: Vec<Check>,
    /// Evaluated like checks but not part of the verdict.
    pub diagnostics: Vec<Check>,
    pub notes: Vec<String>,
    pub wall_time: f64,
    pub threads: usize,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `k,empirical,stderr,predicted`, rows `0..=k_max` then the tail.
    pub fn distributions_csv(&self) -> String {
        let mut out = String::from("k,empirical,stderr,predicted\n");
        for k in 0..=self.empirical.k_max() {
            let _ = writeln!(
                out,
                "{k},{},{},{}",
                self.empirical.probability(k),
                self.empirical.std_error(k),
                self.predicted.probs.get(k).copied().unwrap_or(0.0)
            );
        }
        let _ = writeln!(
            out,
            "tail,{},{},{}",
            self.empirical.table().tail,
            self.empirical.tail_se(),
            self.predicted.tail
        );
        out
    }

    /// Estimator rows followed by the run-level quantities.
    pub fn estimators_csv(&self) -> String {
        let mut out = self.estimators.to_csv();
        let trials = self.empirical.trials;
        let _ = writeln!(out, "target_measure,0,{},NaN,0", self.target_measure);
        let _ = writeln!(out, "horizon,0,{},NaN,{trials}", self.horizon);
        let _ = writeln!(out, "tv,0,{},NaN,{trials}", self.tv);
        let _ = writeln!(out, "predicted_extremal_index,1,{},NaN,0", self.prediction.extremal_index);
        for l in 1..=self.prediction.spectrum.len().min(self.config.ell_max) {
            let _ = writeln!(out, "predicted_lambda,{l},{},NaN,0", self.prediction.spectrum.lambda(l));
        }
        out
    }

    /// Human-readable summary; contains no timing so reruns match byte for byte.
    pub fn summary_text(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "preset: {}", c.preset);
        let _ = writeln!(s, "map: {}", c.map);
        let _ = writeln!(s, "target: {}", c.target);
        let _ = writeln!(s, "target measure: {:.6e}", self.target_measure);
        if let Some(h) = &self.hit_probability {
            let _ = writeln!(s, "p_hat (L = {}): {:.6e} +- {:.2e}", c.scaling.block, h.value, h.std_error);
        }
        let _ = writeln!(s, "horizon N: {}", self.horizon);
        let _ = writeln!(s, "trials: {}", self.empirical.trials);
        let _ = writeln!(s, "predicted law: {}", self.law);
        let _ = writeln!(s, "TV(empirical, predicted): {:.6}", self.tv);
        let _ = writeln!(s, "predicted extremal index: {:.6}", self.prediction.extremal_index);
        if let Some(a) = &self.estimators.alpha {
            let _ = writeln!(
                s,
                "estimated extremal index: {:.6} +- {:.2e}",
                a.extremal_index(),
                a.extremal_index_se()
            );
        }
        if let Some(l) = &self.estimators.lambda {
            let _ = writeln!(s, "cluster sizes (estimated, predicted):");
            for k in 1..=c.tolerances.lambda_terms.min(l.ell_max()) {
                let _ = writeln!(
                    s,
                    "  {k}: {:.6} +- {:.2e}  {:.6}",
                    l.lambda(k),
                    l.lambda_se(k),
                    self.prediction.spectrum.lambda(k)
                );
            }
        }
        for n in self.prediction.notes.iter().chain(&self.notes) {
            let _ = writeln!(s, "note: {n}");
        }
        let _ = writeln!(s, "checks:");
        for ch in &self.checks {
            let _ = writeln!(s, "  {}", ch.line());
        }
        if !self.diagnostics.is_empty() {
            let _ = writeln!(s, "diagnostics (not part of the result):");
            for ch in &self.diagnostics {
                let _ = writeln!(s, "  {}", ch.line());
            }
        }
        let _ = writeln!(s, "result: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}
