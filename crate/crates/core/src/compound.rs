//! Cluster spectra and compound limit laws.
//!
//! `W = Y_1 + ... + Y_Q` with `Q` Poisson (or binomial) and `Y_i` i.i.d. with
//! law `lambda` on `{1, 2, ...}`. Compound Poisson tables come from the Panjer
//! recursion; compound binomial tables sum over the number of clusters with
//! convolution powers of `lambda` (all terms nonnegative).
//!
//! Spectra are finite vectors plus an explicit tail mass sitting beyond the
//! tabulated range. Pmf values are exact for `k` up to the spectrum length.

use rand::Rng;
use std::fmt;

use crate::counting::{ConditionalSampler, SimulationSetup};
use crate::dynamics::MapSystem;
use crate::error::{ensure, Error, Result};
use crate::measure::DensityModel;
use crate::rng::run_trials;
use crate::stats::Ratio;
use crate::targets::TargetFamily;

const SUM_TOL: f64 = 1e-9;

/// Cluster-size law: `probs[l - 1] = lambda_l`, plus mass beyond the table.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSpectrum {
    probs: Vec<f64>,
    tail: f64,
}

impl ClusterSpectrum {
    pub fn new(probs: Vec<f64>, tail: f64) -> Result<Self> {
        ensure(probs.iter().chain([&tail]).all(|p| *p >= 0.0 && p.is_finite()), || {
            "spectrum entries must be finite and nonnegative".into()
        })?;
        let total: f64 = probs.iter().sum::<f64>() + tail;
        ensure((total - 1.0).abs() <= SUM_TOL, || {
            format!("spectrum sums to {total}, not 1")
        })?;
        Ok(ClusterSpectrum { probs, tail })
    }

    /// All clusters have size 1.
    pub fn singleton() -> Self {
        ClusterSpectrum {
            probs: vec![1.0],
            tail: 0.0,
        }
    }

    /// `lambda_l = (1 - q) q^(l-1)` for `l <= len`.
    pub fn geometric(q: f64, len: usize) -> Result<Self> {
        ensure((0.0..1.0).contains(&q) && len >= 1, || {
            format!("geometric ratio {q} outside [0, 1) or empty table")
        })?;
        let probs = (0..len).map(|l| (1.0 - q) * q.powi(l as i32)).collect();
        Ok(ClusterSpectrum {
            probs,
            tail: q.powi(len as i32),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `lambda_l`, zero outside the table.
    pub fn lambda(&self, l: usize) -> f64 {
        if l >= 1 && l <= self.probs.len() {
            self.probs[l - 1]
        } else {
            0.0
        }
    }

    /// `sum l lambda_l` over the table.
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }
}

/// Pmf on `0..=k_max` plus the mass above `k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct PmfTable {
    pub probs: Vec<f64>,
    pub tail: f64,
}

impl PmfTable {
    fn from_probs(probs: Vec<f64>) -> Self {
        let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        PmfTable { probs, tail }
    }

    pub fn k_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,probability\n");
        for (k, p) in self.probs.iter().enumerate() {
            out.push_str(&format!("{k},{p}\n"));
        }
        out
    }
}

/// Total variation distance over `0..=k_max` plus the lumped tail.
pub fn total_variation(p: &PmfTable, q: &PmfTable) -> Result<f64> {
    ensure(p.probs.len() == q.probs.len(), || {
        format!("tables of length {} and {}", p.probs.len(), q.probs.len())
    })?;
    let body: f64 = p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum();
    Ok(0.5 * (body + (p.tail - q.tail).abs()))
}

/// Limit laws for `W`.
#[derive(Clone, Debug, PartialEq)]
pub enum CompoundLaw {
    Poisson { t: f64 },
    PolyaAeppli { t: f64, theta: f64 },
    CompoundPoisson { t: f64, spectrum: ClusterSpectrum },
    CompoundBinomial { trials: u64, p: f64, spectrum: ClusterSpectrum },
}

impl CompoundLaw {
    pub fn pmf_table(&self, k_max: usize) -> Result<PmfTable> {
        let probs = match self {
            CompoundLaw::Poisson { t } => {
                check_t(*t)?;
                (0..=k_max).map(|k| poisson_pmf(*t, k)).collect()
            }
            CompoundLaw::PolyaAeppli { t, theta } => {
                check_t(*t)?;
                check_theta(*theta)?;
                (0..=k_max).map(|k| polya_aeppli_pmf(*t, *theta, k)).collect()
            }
            CompoundLaw::CompoundPoisson { t, spectrum } => compound_poisson_pmf(*t, spectrum, k_max)?,
            CompoundLaw::CompoundBinomial { trials, p, spectrum } => {
                compound_binomial_pmf(*trials, *p, spectrum, k_max)?
            }
        };
        Ok(PmfTable::from_probs(probs))
    }

    /// `E[W]` over the tabulated part of the spectrum.
    pub fn mean(&self) -> f64 {
        match self {
            CompoundLaw::Poisson { t } => *t,
            CompoundLaw::PolyaAeppli { t, theta } => t / (1.0 - theta),
            CompoundLaw::CompoundPoisson { t, spectrum } => t * spectrum.mean(),
            CompoundLaw::CompoundBinomial { trials, p, spectrum } => *trials as f64 * p * spectrum.mean(),
        }
    }
}

impl fmt::Display for CompoundLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompoundLaw::Poisson { t } => write!(f, "Poisson(t={t})"),
            CompoundLaw::PolyaAeppli { t, theta } => write!(f, "PolyaAeppli(t={t}, theta={theta})"),
            CompoundLaw::CompoundPoisson { t, spectrum } => {
                write!(f, "CompoundPoisson(t={t}, lambda_1={:.6}", spectrum.lambda(1))?;
                if spectrum.len() > 1 {
                    write!(f, ", lambda_2={:.6}", spectrum.lambda(2))?;
                }
                write!(f, ")")
            }
            CompoundLaw::CompoundBinomial { trials, p, spectrum } => {
                write!(f, "CompoundBinomial(n={trials}, p={p}, lambda_1={:.6})", spectrum.lambda(1))
            }
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    ensure(t >= 0.0 && t <= 700.0, || format!("intensity {t} outside [0, 700]"))
}

fn check_theta(theta: f64) -> Result<()> {
    ensure((0.0..1.0).contains(&theta), || format!("theta {theta} outside [0, 1)"))
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

pub fn poisson_pmf(t: f64, k: usize) -> f64 {
    if t == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (-t + k as f64 * t.ln() - ln_factorial(k)).exp()
}

/// `e^-t sum_{j=1..k} theta^(k-j) (1-theta)^j t^j / j! C(k-1, j-1)`, with
/// `P(0) = e^-t`. Terms are combined in log space.
pub fn polya_aeppli_pmf(t: f64, theta: f64, k: usize) -> f64 {
    if k == 0 {
        return (-t).exp();
    }
    if theta == 0.0 {
        return poisson_pmf(t, k);
    }
    if t == 0.0 {
        return 0.0;
    }
    let ratio = ((1.0 - theta) * t / theta).ln();
    let mut ln_term = -t + (k - 1) as f64 * theta.ln() + (1.0 - theta).ln() + t.ln();
    let mut terms = Vec::with_capacity(k);
    for j in 1..=k {
        terms.push(ln_term);
        if j < k {
            ln_term += ratio + ((k - j) as f64).ln() - (j as f64).ln() - ((j + 1) as f64).ln();
        }
    }
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top.exp() * terms.iter().map(|x| (x - top).exp()).sum::<f64>()
}

/// Compound Poisson pmf on `0..=k_max` by the Panjer recursion
/// `g(k) = (t/k) sum_l l lambda_l g(k-l)`, `g(0) = e^-t`.
pub fn compound_poisson_pmf(t: f64, spectrum: &ClusterSpectrum, k_max: usize) -> Result<Vec<f64>> {
    check_t(t)?;
    // Scaled by e^t to keep the recursion away from underflow.
    let mut h = vec![0.0; k_max + 1];
    h[0] = 1.0;
    for k in 1..=k_max {
        let mut acc = 0.0;
        for l in 1..=k.min(spectrum.len()) {
            acc += l as f64 * spectrum.probs[l - 1] * h[k - l];
        }
        h[k] = t * acc / k as f64;
    }
    let scale = (-t).exp();
    Ok(h.into_iter().map(|v| v * scale).collect())
}

/// Compound binomial pmf: `sum_q Bin(n, p)(q) lambda^{*q}(k)`.
pub fn compound_binomial_pmf(trials: u64, p: f64, spectrum: &ClusterSpectrum, k_max: usize) -> Result<Vec<f64>> {
    ensure((0.0..=1.0).contains(&p), || format!("probability {p} outside [0, 1]"))?;
    let mut out = vec![0.0; k_max + 1];
    let mut power = vec![0.0; k_max + 1];
    power[0] = 1.0;
    let qmax = (k_max as u64).min(trials) as usize;
    for q in 0..=qmax {
        let w = binomial_pmf(trials, p, q as u64);
        for k in 0..=k_max {
            out[k] += w * power[k];
        }
        let mut next = vec![0.0; k_max + 1];
        for (k, &v) in power.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for l in 1..=spectrum.len() {
                if k + l > k_max {
                    break;
                }
                next[k + l] += v * spectrum.probs[l - 1];
            }
        }
        power = next;
    }
    Ok(out)
}

fn binomial_pmf(n: u64, p: f64, q: u64) -> f64 {
    if q > n {
        return 0.0;
    }
    if p == 0.0 {
        return if q == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if q == n { 1.0 } else { 0.0 };
    }
    let ln_choose: f64 = (0..q).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum();
    (ln_choose + q as f64 * p.ln() + (n - q) as f64 * (1.0 - p).ln()).exp()
}

/// `E[W] = t sum l lambda_l`, with the tail reported separately.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaldMean {
    pub mean: f64,
    /// Mass of the spectrum beyond the table; its contribution to the mean is
    /// at least `t * tail_mass * (len + 1)`.
    pub tail_mass: f64,
}

pub fn wald_mean(t: f64, spectrum: &ClusterSpectrum) -> WaldMean {
    WaldMean {
        mean: t * spectrum.mean(),
        tail_mass: spectrum.tail,
    }
}

/// `lambda_k = (alpha_k - alpha_{k+1}) / alpha_1` for `k < m`; the rest,
/// `alpha_m / alpha_1`, becomes the tail.
pub fn lambda_from_alpha(alpha: &[f64]) -> Result<ClusterSpectrum> {
    ensure(!alpha.is_empty(), || "empty alpha sequence".into())?;
    let a1 = alpha[0];
    if a1 <= 0.0 {
        return Err(Error::ZeroExtremalIndex);
    }
    for (i, w) in alpha.windows(2).enumerate() {
        if w[1] > w[0] + 1e-12 {
            return Err(Error::NotMonotone { index: i + 2 });
        }
    }
    let probs: Vec<f64> = alpha.windows(2).map(|w| ((w[0] - w[1]) / a1).max(0.0)).collect();
    let tail = alpha[alpha.len() - 1] / a1;
    let total: f64 = probs.iter().sum::<f64>() + tail;
    ClusterSpectrum::new(probs.iter().map(|p| p / total).collect(), tail / total)
}

/// Spectrum for a union of balls around periodic points with contraction
/// factors `theta_i` and density values `h_i`:
/// `lambda_k = sum (1-theta_i)^2 theta_i^(k-1) h_i / sum (1-theta_i) h_i`
/// and `alpha_1 = sum (1-theta_i) H_i` with `H_i = h_i / sum h_j`.
pub fn finite_periodic_spectrum(thetas: &[f64], densities: &[f64], len: usize) -> Result<(f64, ClusterSpectrum)> {
    ensure(!thetas.is_empty() && thetas.len() == densities.len() && len >= 1, || {
        "need matching, nonempty theta and density lists".into()
    })?;
    for &t in thetas {
        check_theta(t)?;
    }
    ensure(densities.iter().all(|h| *h >= 0.0) && densities.iter().sum::<f64>() > 0.0, || {
        "densities must be nonnegative and not all zero".into()
    })?;
    let hsum: f64 = densities.iter().sum();
    let norm: f64 = thetas.iter().zip(densities).map(|(t, h)| (1.0 - t) * h).sum();
    let extremal = norm / hsum;
    let probs = (1..=len)
        .map(|k| {
            thetas
                .iter()
                .zip(densities)
                .map(|(t, h)| (1.0 - t).powi(2) * t.powi(k as i32 - 1) * h)
                .sum::<f64>()
                / norm
        })
        .collect();
    let tail = thetas
        .iter()
        .zip(densities)
        .map(|(t, h)| (1.0 - t) * t.powi(len as i32) * h)
        .sum::<f64>()
        / norm;
    Ok((extremal, ClusterSpectrum::new(probs, tail)?))
}

/// `gamma_k(i)`: law of the index of the `k`-th return of the second
/// coordinate to `[a, b]` under `T_2^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaTable {
    /// `rows[k - 1][i]` for `i = 0..=i_max`.
    pub rows: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    pub draws: u64,
}

impl GammaTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        ensure(!rows.is_empty() && rows.iter().all(|r| r.len() == rows[0].len()), || {
            "gamma rows must be nonempty and of equal length".into()
        })?;
        let std_errors = rows.iter().map(|r| vec![0.0; r.len()]).collect();
        Ok(GammaTable { rows, std_errors, draws: 0 })
    }

    pub fn k_max(&self) -> usize {
        self.rows.len()
    }

    pub fn i_max(&self) -> usize {
        self.rows[0].len() - 1
    }

    pub fn gamma(&self, k: usize, i: usize) -> f64 {
        self.rows
            .get(k.wrapping_sub(1))
            .and_then(|r| r.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Monte Carlo estimate of the gamma table from starts distributed by the
/// invariant measure of `map` restricted to `[a, b]`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_gamma(
    map: &MapSystem,
    density: &DensityModel,
    period: usize,
    interval: (f64, f64),
    k_max: usize,
    i_max: usize,
    draws: u64,
    seed: u64,
) -> Result<GammaTable> {
    ensure(period >= 1 && k_max >= 1 && i_max >= 1 && draws >= 1, || {
        "period, k_max, i_max and draws must be positive".into()
    })?;
    let target = TargetFamily::interval(interval.0, interval.1)?;
    let setup = SimulationSetup::new(map, density, &target)?;
    let sampler = ConditionalSampler::new(&setup)?;
    let width = k_max * (i_max + 1);
    let r = run_trials(
        draws,
        seed,
        || Ratio::new(width),
        |acc, rng, _| {
            let mut a = vec![0.0; width];
            let (mut b, mut n) = (0.0, 0);
            sampler.draw(rng, |mut st, w, rng: &mut _| {
                let mut k = 0;
                for i in 1..=i_max {
                    for _ in 0..period {
                        map.step(&mut st, rng);
                    }
                    if target.contains(st.point()) {
                        a[k * (i_max + 1) + i] += w;
                        k += 1;
                        if k == k_max {
                            break;
                        }
                    }
                }
                b += w;
                n += 1;
            })?;
            acc.push(&a, b, n);
            Ok(())
        },
        Ratio::merge,
    )?;
    let rows = (0..k_max)
        .map(|k| (0..=i_max).map(|i| r.value(k * (i_max + 1) + i)).collect())
        .collect();
    let std_errors = (0..k_max)
        .map(|k| (0..=i_max).map(|i| r.std_error(k * (i_max + 1) + i)).collect())
        .collect();
    Ok(GammaTable { rows, std_errors, draws: r.draws })
}

/// Spectrum of a strip target `B(x) x [a, b]` with `x` periodic.
#[derive(Clone, Debug, PartialEq)]
pub struct StripSpectrum {
    pub extremal_index: f64,
    pub spectrum: ClusterSpectrum,
    /// `alpha_hat_{k+1} = sum_{i >= k} theta^i gamma_k(i)` for `k = 0..=k_max`.
    pub alpha_hat: Vec<f64>,
    /// Bound on the mass dropped by cutting the sums at `i_max`.
    pub truncation_bound: f64,
}

pub fn product_strip_spectrum(theta: f64, table: &GammaTable) -> Result<StripSpectrum> {
    check_theta(theta)?;
    let (km, im) = (table.k_max(), table.i_max());
    let mut alpha_hat = vec![1.0];
    for k in 1..=km {
        let s: f64 = (k..=im).map(|i| theta.powi(i as i32) * table.gamma(k, i)).sum();
        alpha_hat.push(s);
    }
    let alpha: Vec<f64> = alpha_hat.windows(2).map(|w| w[0] - w[1]).collect();
    let spectrum = lambda_from_alpha(&alpha)?;
    Ok(StripSpectrum {
        extremal_index: alpha[0],
        spectrum,
        alpha_hat,
        truncation_bound: theta.powi(im as i32 + 1) / (1.0 - theta),
    })
}

/// Draws one value from a pmf table (tail mapped to `k_max + 1`).
pub fn sample_table<R: Rng + ?Sized>(table: &PmfTable, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in table.probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    table.probs.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_and_pa_basics() {
        assert!((poisson_pmf(1.0, 0) - (-1f64).exp()).abs() < 1e-15);
        assert!((polya_aeppli_pmf(1.0, 0.0, 3) - poisson_pmf(1.0, 3)).abs() < 1e-15);
        let s: f64 = (0..=120).map(|k| polya_aeppli_pmf(2.0, 0.6, k)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        // PA(t, theta) is compound Poisson with geometric(theta) clusters.
        let g = ClusterSpectrum::geometric(0.25, 80).unwrap();
        let cp = compound_poisson_pmf(1.0, &g, 30).unwrap();
        for (k, v) in cp.iter().enumerate() {
            assert!((v - polya_aeppli_pmf(1.0, 0.25, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_from_geometric_alpha() {
        let a1: f64 = 0.4;
        let alpha: Vec<f64> = (0..20).map(|k| a1 * (1.0 - a1).powi(k)).collect();
        let s = lambda_from_alpha(&alpha).unwrap();
        for k in 1..20 {
            assert!((s.lambda(k) - alpha[k - 1]).abs() < 1e-12);
        }
        assert!(matches!(lambda_from_alpha(&[0.0, 0.0]), Err(Error::ZeroExtremalIndex)));
        assert!(matches!(lambda_from_alpha(&[0.5, 0.6]), Err(Error::NotMonotone { index: 2 })));
    }

    #[test]
    fn finite_periodic_example() {
        let (a1, s) = finite_periodic_spectrum(&[0.5, 0.25], &[1.0, 1.0], 40).unwrap();
        assert!((a1 - 0.625).abs() < 1e-15);
        assert!((s.lambda(1) - 0.65).abs() < 1e-12);
        assert!((s.lambda(2) - 0.2125).abs() < 1e-12);
        let (b1, single) = finite_periodic_spectrum(&[0.25], &[1.0], 40).unwrap();
        assert!((b1 - 0.75).abs() < 1e-15);
        let g = ClusterSpectrum::geometric(0.25, 40).unwrap();
        for k in 1..=40 {
            assert!((single.lambda(k) - g.lambda(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn strip_spectrum_special_cases() {
        // gamma_k(i) concentrated at i = k.
        let (km, im) = (12, 40);
        let rows = (1..=km)
            .map(|k| (0..=im).map(|i| if i == k { 0.5f64.powi(k as i32) } else { 0.0 }).collect())
            .collect();
        let t = GammaTable::from_rows(rows).unwrap();
        let s = product_strip_spectrum(0.25, &t).unwrap();
        assert!((s.extremal_index - 0.875).abs() < 1e-15);
        for k in 1..km {
            assert!((s.spectrum.lambda(k) - 0.875 * 0.125f64.powi(k as i32 - 1)).abs() < 1e-12);
        }
        let z = product_strip_spectrum(0.0, &t).unwrap();
        assert_eq!(z.spectrum.lambda(1), 1.0);
    }

    #[test]
    fn tv_is_a_metric_on_tables() {
        let a = CompoundLaw::Poisson { t: 1.0 }.pmf_table(30).unwrap();
        let b = CompoundLaw::PolyaAeppli { t: 1.0, theta: 0.25 }.pmf_table(30).unwrap();
        assert_eq!(total_variation(&a, &a).unwrap(), 0.0);
        let d = total_variation(&a, &b).unwrap();
        assert!(d > 0.0 && d <= 1.0);
        assert_eq!(d, total_variation(&b, &a).unwrap());
    }

    #[test]
    fn compound_binomial_sums_to_one() {
        let g = ClusterSpectrum::geometric(0.3, 60).unwrap();
        let v = compound_binomial_pmf(200, 0.01, &g, 60).unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((v[0] - 0.99f64.powi(200)).abs() < 1e-15);
    }
}
