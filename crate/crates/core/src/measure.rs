//! Invariant densities: exact Lebesgue, orbit histograms and products.

use rand::Rng;
use rayon::prelude::*;
use std::fmt::Write as _;

use crate::dynamics::{MapSystem, OrbitState};
use crate::error::{ensure, Error, Result};
use crate::rng::trial_rng;

const SHARDS: u64 = 16;

/// Piecewise-constant density on `bins` equal bins of `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    masses: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Histogram {
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        ensure(!masses.is_empty(), || "histogram needs at least one bin".into())?;
        ensure(masses.iter().all(|m| *m >= 0.0 && m.is_finite()), || {
            "histogram masses must be finite and nonnegative".into()
        })?;
        let total: f64 = masses.iter().sum();
        ensure((total - 1.0).abs() < 1e-9, || {
            format!("histogram masses sum to {total}, not 1")
        })?;
        let mut cumulative = Vec::with_capacity(masses.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for m in &masses {
            acc += m;
            cumulative.push(acc);
        }
        Ok(Histogram { masses, cumulative })
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        ensure(total > 0, || "histogram from an empty orbit".into())?;
        Self::from_masses(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    fn cdf(&self, x: f64) -> f64 {
        let b = self.bins();
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return self.cumulative[b];
        }
        let s = x * b as f64;
        let k = (s as usize).min(b - 1);
        self.cumulative[k] + self.masses[k] * (s - k as f64)
    }

    pub fn density_at(&self, x: f64) -> f64 {
        let b = self.bins();
        let k = ((x.clamp(0.0, 1.0) * b as f64) as usize).min(b - 1);
        self.masses[k] * b as f64
    }
}

/// Model of the invariant measure used for target measures and conditioning.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityModel {
    ExactLebesgue,
    Histogram(Histogram),
    ProductDensity(Box<DensityModel>, Box<DensityModel>),
}

impl DensityModel {
    /// Measure of `[a, b]`; for product models, of `[a, b] x [0, 1]`.
    pub fn interval_measure(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
        if b <= a {
            return 0.0;
        }
        match self {
            DensityModel::ExactLebesgue => b - a,
            DensityModel::Histogram(h) => h.cdf(b) - h.cdf(a),
            DensityModel::ProductDensity(l, _) => l.interval_measure(a, b),
        }
    }

    /// Measure of `[a, b] x [c, d]` under a product model.
    pub fn rectangle_measure(&self, a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
        match self {
            DensityModel::ProductDensity(l, r) => {
                Ok(l.interval_measure(a, b) * r.interval_measure(c, d))
            }
            _ => Err(Error::DimensionMismatch(
                "rectangle measure needs a product density".into(),
            )),
        }
    }

    /// Density value at `x` of a one-dimensional model.
    pub fn density_at(&self, x: f64) -> f64 {
        match self {
            DensityModel::ExactLebesgue => 1.0,
            DensityModel::Histogram(h) => h.density_at(x),
            DensityModel::ProductDensity(l, _) => l.density_at(x),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            DensityModel::ProductDensity(..) => 2,
            _ => 1,
        }
    }

    /// Components of a product model.
    pub fn components(&self) -> Option<(&DensityModel, &DensityModel)> {
        match self {
            DensityModel::ProductDensity(l, r) => Some((l, r)),
            _ => None,
        }
    }

    /// CSV with header `bin_left,bin_right,mass`.
    pub fn to_csv(&self) -> Result<String> {
        let masses: Vec<f64> = match self {
            DensityModel::ExactLebesgue => vec![1.0],
            DensityModel::Histogram(h) => h.masses.clone(),
            DensityModel::ProductDensity(..) => {
                return Err(Error::DimensionMismatch(
                    "product densities have no single-table CSV form".into(),
                ))
            }
        };
        let b = masses.len() as f64;
        let mut out = String::from("bin_left,bin_right,mass\n");
        for (i, m) in masses.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", i as f64 / b, (i + 1) as f64 / b, m);
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut masses = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("bin_left") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::Config(format!("density csv line {}: expected 3 columns", n + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("density csv line {}: bad number `{s}`", n + 1)))
            };
            let (l, r, m) = (parse(cols[0])?, parse(cols[1])?, parse(cols[2])?);
            let i = masses.len();
            masses.push((l, r, m, i));
        }
        let b = masses.len() as f64;
        for &(l, r, _, i) in &masses {
            ensure(
                (l - i as f64 / b).abs() < 1e-9 && (r - (i + 1) as f64 / b).abs() < 1e-9,
                || format!("density csv bin {i} is not on the uniform grid"),
            )?;
        }
        Ok(DensityModel::Histogram(Histogram::from_masses(
            masses.into_iter().map(|t| t.2).collect(),
        )?))
    }
}

/// Settings for orbit-histogram estimation.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySettings {
    pub bins: usize,
    pub orbit_length: u64,
    pub burn_in: u64,
}

impl Default for DensitySettings {
    fn default() -> Self {
        DensitySettings {
            bins: 1024,
            orbit_length: 10_000_000,
            burn_in: 10_000,
        }
    }
}

/// Histogram of a long orbit, split into independently seeded shards.
///
/// Products are estimated coordinate by coordinate.
pub fn estimate_density(
    map: &MapSystem,
    bins: usize,
    orbit_length: u64,
    burn_in: u64,
    seed: u64,
) -> Result<DensityModel> {
    ensure(bins > 0, || "bins must be positive".into())?;
    ensure(orbit_length >= bins as u64, || {
        format!("orbit length {orbit_length} shorter than the {bins} bins")
    })?;
    if let MapSystem::Product(a, b) = map {
        let l = estimate_density(a, bins, orbit_length, burn_in, seed)?;
        let r = estimate_density(b, bins, orbit_length, burn_in, seed ^ 0x5bd1_e995)?;
        return Ok(DensityModel::ProductDensity(Box::new(l), Box::new(r)));
    }
    let per_shard = orbit_length.div_ceil(SHARDS);
    let shards: Vec<Vec<u64>> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = trial_rng(seed, s);
            let mut state = map.uniform_state(&mut rng);
            for _ in 0..burn_in {
                map.step(&mut state, &mut rng);
            }
            let mut counts = vec![0u64; bins];
            for _ in 0..per_shard {
                let x = state.value();
                let k = ((x * bins as f64) as usize).min(bins - 1);
                counts[k] += 1;
                map.step(&mut state, &mut rng);
            }
            counts
        })
        .collect();
    let mut counts = vec![0u64; bins];
    for shard in shards {
        for (c, s) in counts.iter_mut().zip(shard) {
            *c += s;
        }
    }
    let total: u64 = counts.iter().sum();
    let (bin, &top) = counts
        .iter()
        .enumerate()
        .max_by_key(|(_, c)| **c)
        .expect("bins > 0");
    let share = top as f64 / total as f64;
    if bins > 1 && share > 0.99 {
        return Err(Error::DegenerateOrbit { bin, share });
    }
    Ok(DensityModel::Histogram(Histogram::from_counts(&counts)?))
}

/// Density model for a map: exact Lebesgue where it is invariant, histograms otherwise.
pub fn invariant_density(map: &MapSystem, settings: &DensitySettings, seed: u64) -> Result<DensityModel> {
    match map {
        MapSystem::Doubling => Ok(DensityModel::ExactLebesgue),
        MapSystem::Product(a, b) => Ok(DensityModel::ProductDensity(
            Box::new(invariant_density(a, settings, seed)?),
            Box::new(invariant_density(b, settings, seed ^ 0x5bd1_e995)?),
        )),
        m => estimate_density(m, settings.bins, settings.orbit_length, settings.burn_in, seed),
    }
}

/// Approximately stationary state: exact for Lebesgue models, otherwise a
/// uniform start pushed through `burn_in` steps.
pub fn sample_stationary<R: Rng + ?Sized>(
    map: &MapSystem,
    d: &DensityModel,
    burn_in: u64,
    rng: &mut R,
) -> OrbitState {
    match (map, d) {
        (MapSystem::Product(a, b), DensityModel::ProductDensity(l, r)) => OrbitState::Pair(
            Box::new(sample_stationary(a, l, burn_in, rng)),
            Box::new(sample_stationary(b, r, burn_in, rng)),
        ),
        (m, DensityModel::ExactLebesgue) => m.uniform_state(rng),
        (m, _) => {
            let mut s = m.uniform_state(rng);
            for _ in 0..burn_in {
                m.step(&mut s, rng);
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lebesgue_intervals() {
        let d = DensityModel::ExactLebesgue;
        assert_eq!(d.interval_measure(0.2, 0.5), 0.3);
        assert_eq!(d.interval_measure(0.5, 0.2), 0.0);
        assert_eq!(d.interval_measure(-1.0, 2.0), 1.0);
    }

    #[test]
    fn histogram_proration_is_additive() {
        let h = Histogram::from_masses(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let d = DensityModel::Histogram(h);
        assert!((d.interval_measure(0.0, 0.125) - 0.05).abs() < 1e-15);
        let (a, b, c) = (0.1, 0.37, 0.93);
        let lhs = d.interval_measure(a, c);
        let rhs = d.interval_measure(a, b) + d.interval_measure(b, c);
        assert!((lhs - rhs).abs() < 1e-12);
        assert!((d.interval_measure(0.0, 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(d.density_at(0.8), 1.6);
    }

    #[test]
    fn doubling_histogram_is_flat() {
        let d = estimate_density(&MapSystem::Doubling, 64, 2_000_000, 100, 3).unwrap();
        let DensityModel::Histogram(h) = &d else { panic!() };
        let sup = h
            .masses()
            .iter()
            .map(|m| (m * 64.0 - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(sup < 0.05, "sup-norm {sup}");
        assert!((d.interval_measure(0.0, 0.5) - 0.5).abs() < 0.01);
    }

    #[test]
    fn csv_round_trip() {
        let d = DensityModel::Histogram(Histogram::from_masses(vec![0.25, 0.5, 0.25]).unwrap());
        let back = DensityModel::from_csv(&d.to_csv().unwrap()).unwrap();
        let DensityModel::Histogram(h) = back else { panic!() };
        for (a, b) in h.masses().iter().zip([0.25, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(DensityModel::from_csv("bin_left,bin_right,mass\n0,0.3,1\n").is_err());
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(estimate_density(&MapSystem::Doubling, 0, 100, 0, 1).is_err());
        assert!(estimate_density(&MapSystem::Doubling, 64, 10, 0, 1).is_err());
    }
}
