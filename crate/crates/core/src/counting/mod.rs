//! Hit counting along orbits and the cluster estimators.
//!
//! For a block length `L`:
//!
//! * `p_hat = P(Z^L >= 1)`, estimated directly from stationary starts or
//!   through the entry-time identity `P(Z^L >= 1) = mu(U) E_U[min(tau_U, L)]`;
//! * `lambda_hat_l = P(Z^L = l | Z^L >= 1)` from stationary starts;
//! * `alpha_hat_l = mu_U(tau^{l-1} < L)` from conditional starts, i.e. the
//!   chance of at least `l - 1` returns among the next `L - 1` steps.
//!
//! Conditional estimates are weighted ratio estimators over independent
//! draws; their standard errors use the delta method on per-draw totals.

mod conditional;

pub use conditional::ConditionalSampler;

use rand::Rng;
use std::fmt::Write as _;

use crate::compound::{lambda_from_alpha, ClusterSpectrum, PmfTable};
use crate::dynamics::{MapSystem, OrbitState};
use crate::error::{ensure, Error, Result};
use crate::measure::{sample_stationary, DensityModel};
use crate::rng::run_trials;
use crate::stats::Ratio;
use crate::targets::{horizon, ScalingRule, TargetFamily};

/// Map, density model and target of one experiment.
#[derive(Clone, Debug)]
pub struct SimulationSetup<'a> {
    pub map: &'a MapSystem,
    pub density: &'a DensityModel,
    pub target: &'a TargetFamily,
    /// Steps applied to uniform starts before they count as stationary.
    pub burn_in: u64,
    /// Histogram targets at least this heavy are conditioned by rejection.
    pub rejection_min_measure: f64,
}

impl<'a> SimulationSetup<'a> {
    pub fn new(map: &'a MapSystem, density: &'a DensityModel, target: &'a TargetFamily) -> Result<Self> {
        if map.dimension() != density.dimension() || map.dimension() != target.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "map has dimension {}, density {}, target {}",
                map.dimension(),
                density.dimension(),
                target.dimension()
            )));
        }
        Ok(SimulationSetup {
            map,
            density,
            target,
            burn_in: 1_000,
            rejection_min_measure: 1e-2,
        })
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_target(&self, target: &'a TargetFamily) -> Self {
        SimulationSetup { target, ..self.clone() }
    }

    fn stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> OrbitState {
        sample_stationary(self.map, self.density, self.burn_in, rng)
    }

    /// Counts hits of `T^j x` for `j < len`, starting at `state`.
    #[inline]
    fn count<R: Rng + ?Sized>(&self, state: &mut OrbitState, len: u64, rng: &mut R) -> u64 {
        let mut hits = 0;
        for j in 0..len {
            if self.target.contains(state.point()) {
                hits += 1;
            }
            if j + 1 < len {
                self.map.step(state, rng);
            }
        }
        hits
    }

    /// Returns within steps `1..len` of a start in the target: how many (capped
    /// at `cap`) and the first return time (or `len`).
    #[inline]
    fn returns<R: Rng + ?Sized>(&self, state: &mut OrbitState, len: u64, cap: u64, rng: &mut R) -> (u64, u64) {
        let (mut count, mut first) = (0, len);
        for j in 1..len {
            self.map.step(state, rng);
            if self.target.contains(state.point()) {
                if count == 0 {
                    first = j;
                }
                count += 1;
                if count >= cap {
                    break;
                }
            }
        }
        (count, first)
    }

    /// Hit series of one orbit over `n` steps, padded up to a multiple of `block`.
    pub fn count_orbit<R: Rng + ?Sized>(
        &self,
        mut x0: OrbitState,
        n: u64,
        block: u64,
        rng: &mut R,
    ) -> Result<HitSeries> {
        ensure(block >= 1, || "block length must be positive".into())?;
        let padded = n.div_ceil(block).max(1) * block;
        let mut blocks = vec![0u32; (padded / block) as usize];
        let mut hit_times = Vec::new();
        for j in 0..padded {
            if self.target.contains(x0.point()) {
                blocks[(j / block) as usize] += 1;
                hit_times.push(j);
            }
            if j + 1 < padded {
                self.map.step(&mut x0, rng);
            }
        }
        Ok(HitSeries {
            block_length: block,
            requested: n,
            total: hit_times.len() as u64,
            blocks,
            hit_times,
        })
    }

    /// `P(Z^L >= 1)` from stationary starts.
    pub fn estimate_hit_prob(&self, block: u64, trials: u64, seed: u64) -> Result<HitProbability> {
        ensure(block >= 1 && trials >= 1, || "block and trials must be positive".into())?;
        let positives = run_trials(
            trials,
            seed,
            || 0u64,
            |acc, rng, _| {
                let mut s = self.stationary(rng);
                for j in 0..block {
                    if self.target.contains(s.point()) {
                        *acc += 1;
                        break;
                    }
                    if j + 1 < block {
                        self.map.step(&mut s, rng);
                    }
                }
                Ok(())
            },
            |a, b| *a += b,
        )?;
        if positives == 0 {
            return Err(Error::AllZero { trials, block_length: block });
        }
        let p = positives as f64 / trials as f64;
        Ok(HitProbability {
            value: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            samples: trials,
            method: HitProbMethod::Direct,
        })
    }

    /// `P(Z^L >= 1) = mu(U) E_U[min(tau_U, L)]` with conditional starts.
    ///
    /// The quoted error covers the conditional expectation only; `mu(U)` is
    /// taken from the density model as exact.
    pub fn estimate_hit_prob_entry_time(&self, block: u64, draws: u64, seed: u64) -> Result<HitProbability> {
        ensure(block >= 1 && draws >= 1, || "block and draws must be positive".into())?;
        let mu = self.target.measure(self.density)?;
        let sampler = ConditionalSampler::new(self)?;
        let r = run_trials(
            draws,
            seed,
            || Ratio::new(1),
            |acc, rng, _| {
                let (mut a, mut b, mut n) = (0.0, 0.0, 0);
                sampler.draw(rng, |mut st, w, rng| {
                    let (_, first) = self.returns(&mut st, block, 1, rng);
                    a += w * first as f64;
                    b += w;
                    n += 1;
                })?;
                acc.push(&[a], b, n);
                Ok(())
            },
            Ratio::merge,
        )?;
        let (m, se) = (r.value(0), r.std_error(0));
        Ok(HitProbability {
            value: (mu * m).min(1.0),
            std_error: mu * se,
            samples: r.items,
            method: HitProbMethod::EntryTime,
        })
    }

    /// Picks the direct route when it would see enough positives, else the
    /// entry-time route.
    pub fn estimate_hit_prob_auto(&self, block: u64, trials: u64, seed: u64) -> Result<HitProbability> {
        let mu = self.target.measure(self.density)?;
        let expected = (mu * block as f64).min(1.0) * trials as f64;
        if expected >= 5_000.0 {
            self.estimate_hit_prob(block, trials, seed)
        } else {
            self.estimate_hit_prob_entry_time(block, trials, seed)
        }
    }

    /// Distribution of `Z^L` given `Z^L >= 1`, for `l = 1..=ell_max` plus a tail.
    pub fn estimate_lambdas(&self, block: u64, trials: u64, seed: u64, ell_max: usize) -> Result<LambdaEstimate> {
        ensure(block >= 1 && trials >= 1 && ell_max >= 1, || {
            "block, trials and ell_max must be positive".into()
        })?;
        let init = || LambdaEstimate {
            block_length: block,
            trials: 0,
            positives: 0,
            counts: vec![0; ell_max],
            tail: 0,
            total_hits: 0,
        };
        let est = run_trials(
            trials,
            seed,
            init,
            |acc, rng, _| {
                let mut s = self.stationary(rng);
                let z = self.count(&mut s, block, rng);
                acc.trials += 1;
                if z > 0 {
                    acc.positives += 1;
                    acc.total_hits += z;
                    if z as usize <= ell_max {
                        acc.counts[z as usize - 1] += 1;
                    } else {
                        acc.tail += 1;
                    }
                }
                Ok(())
            },
            |a, b| {
                a.trials += b.trials;
                a.positives += b.positives;
                a.total_hits += b.total_hits;
                a.tail += b.tail;
                for (x, y) in a.counts.iter_mut().zip(b.counts) {
                    *x += y;
                }
            },
        )?;
        if est.positives == 0 {
            return Err(Error::AllZero { trials, block_length: block });
        }
        Ok(est)
    }

    /// `alpha_hat_l` for `l = 1..=ell_max + 1` from conditional starts.
    pub fn estimate_alpha_hat(&self, block: u64, draws: u64, seed: u64, ell_max: usize) -> Result<AlphaEstimate> {
        ensure(block >= 2 && draws >= 1 && ell_max >= 1, || {
            "block must be at least 2; draws and ell_max positive".into()
        })?;
        let sampler = ConditionalSampler::new(self)?;
        let m = ell_max;
        // Layout: [R >= 0 .. R >= m] [R == 0 .. R == m-1] [min(tau, L)].
        let width = 2 * m + 2;
        let r = run_trials(
            draws,
            seed,
            || Ratio::new(width),
            |acc, rng, _| {
                let mut a = vec![0.0; width];
                let (mut b, mut n) = (0.0, 0);
                sampler.draw(rng, |mut st, w, rng| {
                    let (count, first) = self.returns(&mut st, block, m as u64, rng);
                    let c = count as usize;
                    for v in &mut a[..=c.min(m)] {
                        *v += w;
                    }
                    if c < m {
                        a[m + 1 + c] += w;
                    }
                    a[2 * m + 1] += w * first as f64;
                    b += w;
                    n += 1;
                })?;
                acc.push(&a, b, n);
                Ok(())
            },
            Ratio::merge,
        )?;
        let alpha_hat: Vec<f64> = (0..=m).map(|j| r.value(j)).collect();
        let alpha_hat_se = (0..=m).map(|j| r.std_error(j)).collect();
        let alpha = (0..m).map(|j| r.value(m + 1 + j)).collect();
        let alpha_se = (0..m).map(|j| r.std_error(m + 1 + j)).collect();
        Ok(AlphaEstimate {
            block_length: block,
            draws: r.draws,
            samples: r.items,
            alpha_hat,
            alpha_hat_se,
            alpha,
            alpha_se,
            mean_min_return: r.value(2 * m + 1),
            mean_min_return_se: r.std_error(2 * m + 1),
        })
    }

    /// Empirical law of `W = Z^N` with `N` from the scaling rule.
    pub fn empirical_w_distribution(
        &self,
        rule: &ScalingRule,
        p_hat: Option<f64>,
        trials: u64,
        seed: u64,
        k_max: usize,
    ) -> Result<EmpiricalDistribution> {
        let n = horizon(rule, self.target, self.density, p_hat)?;
        self.w_distribution_at(n, trials, seed, k_max)
    }

    /// Empirical law of `Z^n` over `trials` stationary starts.
    pub fn w_distribution_at(&self, n: u64, trials: u64, seed: u64, k_max: usize) -> Result<EmpiricalDistribution> {
        ensure(trials >= 1 && n >= 1, || "trials and horizon must be positive".into())?;
        let counts = run_trials(
            trials,
            seed,
            || vec![0u64; k_max + 2],
            |acc, rng, _| {
                let mut s = self.stationary(rng);
                let w = self.count(&mut s, n, rng) as usize;
                acc[w.min(k_max + 1)] += 1;
                Ok(())
            },
            |a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            },
        )?;
        let tail = counts[k_max + 1];
        Ok(EmpiricalDistribution {
            horizon: n,
            trials,
            counts: counts[..=k_max].to_vec(),
            tail,
        })
    }
}

/// Hits of one orbit, grouped into blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct HitSeries {
    pub block_length: u64,
    /// Horizon asked for; the series covers it rounded up to whole blocks.
    pub requested: u64,
    pub blocks: Vec<u32>,
    pub total: u64,
    /// Absolute indices `j` with `T^j x` in the target.
    pub hit_times: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HitProbMethod {
    Direct,
    EntryTime,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HitProbability {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub method: HitProbMethod,
}

/// Block-count distribution conditioned on at least one hit.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaEstimate {
    pub block_length: u64,
    pub trials: u64,
    pub positives: u64,
    /// `counts[l - 1]` blocks with exactly `l` hits.
    pub counts: Vec<u64>,
    /// Blocks with more than `counts.len()` hits.
    pub tail: u64,
    pub total_hits: u64,
}

impl LambdaEstimate {
    pub fn ell_max(&self) -> usize {
        self.counts.len()
    }

    /// `lambda_hat_l` for `l >= 1`.
    pub fn lambda(&self, l: usize) -> f64 {
        match l {
            0 => 0.0,
            l if l <= self.counts.len() => self.counts[l - 1] as f64 / self.positives as f64,
            _ => 0.0,
        }
    }

    pub fn lambda_se(&self, l: usize) -> f64 {
        let p = self.lambda(l);
        (p * (1.0 - p) / self.positives as f64).sqrt()
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail as f64 / self.positives as f64
    }

    /// `E[Z^L | Z^L >= 1]`, including blocks in the tail.
    pub fn mean_cluster_size(&self) -> f64 {
        self.total_hits as f64 / self.positives as f64
    }

    /// `sum l lambda_hat_l` over the tabulated range only.
    pub fn truncated_mean(&self) -> f64 {
        (1..=self.counts.len()).map(|l| l as f64 * self.lambda(l)).sum()
    }

    pub fn spectrum(&self) -> Result<ClusterSpectrum> {
        ClusterSpectrum::new(
            (1..=self.counts.len()).map(|l| self.lambda(l)).collect(),
            self.tail_mass(),
        )
    }

    /// Fraction of stationary starts with at least one hit.
    pub fn hit_probability(&self) -> f64 {
        self.positives as f64 / self.trials as f64
    }
}

/// Return statistics of conditional starts.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaEstimate {
    pub block_length: u64,
    pub draws: u64,
    pub samples: u64,
    /// `alpha_hat[l - 1]` for `l = 1..=ell_max + 1`; `alpha_hat[0] = 1`.
    pub alpha_hat: Vec<f64>,
    pub alpha_hat_se: Vec<f64>,
    /// `alpha[k - 1] = alpha_hat_k - alpha_hat_{k+1}` for `k = 1..=ell_max`.
    pub alpha: Vec<f64>,
    pub alpha_se: Vec<f64>,
    /// `E_U[min(tau_U, L)] = sum_{j=1..L} mu_U(tau_U >= j)`.
    pub mean_min_return: f64,
    pub mean_min_return_se: f64,
}

impl AlphaEstimate {
    pub fn extremal_index(&self) -> f64 {
        self.alpha[0]
    }

    pub fn extremal_index_se(&self) -> f64 {
        self.alpha_se[0]
    }

    /// `(alpha_k - alpha_{k+1}) / alpha_1` as a spectrum.
    pub fn spectrum(&self) -> Result<ClusterSpectrum> {
        lambda_from_alpha(&self.alpha)
    }

    /// Delta-method error of `(alpha_k - alpha_{k+1}) / alpha_1`, treating the
    /// three estimates as independent.
    pub fn lambda_se(&self, k: usize) -> f64 {
        let a1 = self.alpha[0];
        let ak = self.alpha.get(k - 1).copied().unwrap_or(0.0);
        let ak1 = self.alpha.get(k).copied().unwrap_or(0.0);
        let sk = self.alpha_se.get(k - 1).copied().unwrap_or(0.0);
        let sk1 = self.alpha_se.get(k).copied().unwrap_or(0.0);
        let lam = (ak - ak1) / a1;
        let v = (sk * sk + sk1 * sk1) / (a1 * a1) + (lam * self.alpha_se[0] / a1).powi(2);
        v.sqrt()
    }
}

/// Empirical law of `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    pub horizon: u64,
    pub trials: u64,
    /// `counts[k]` trials with `W = k`, `k = 0..=k_max`.
    pub counts: Vec<u64>,
    pub tail: u64,
}

impl EmpiricalDistribution {
    pub fn k_max(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn probability(&self, k: usize) -> f64 {
        self.counts.get(k).map_or(0.0, |&c| c as f64 / self.trials as f64)
    }

    pub fn std_error(&self, k: usize) -> f64 {
        let p = self.probability(k);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn table(&self) -> PmfTable {
        PmfTable {
            probs: (0..self.counts.len()).map(|k| self.probability(k)).collect(),
            tail: self.tail as f64 / self.trials as f64,
        }
    }

    pub fn tail_se(&self) -> f64 {
        let p = self.tail as f64 / self.trials as f64;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Estimates gathered for one target.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EstimatorReport {
    pub hit_probability: Option<HitProbability>,
    pub lambda: Option<LambdaEstimate>,
    pub alpha: Option<AlphaEstimate>,
}

impl EstimatorReport {
    pub fn extremal_index(&self) -> Option<f64> {
        self.alpha.as_ref().map(AlphaEstimate::extremal_index)
    }

    /// CSV rows `quantity,index,value,stderr,n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,index,value,stderr,n\n");
        let mut row = |q: &str, i: usize, v: f64, se: f64, n: u64| {
            let _ = writeln!(out, "{q},{i},{v},{se},{n}");
        };
        if let Some(h) = &self.hit_probability {
            let q = match h.method {
                HitProbMethod::Direct => "p_hat_direct",
                HitProbMethod::EntryTime => "p_hat_entry_time",
            };
            row(q, 0, h.value, h.std_error, h.samples);
        }
        if let Some(l) = &self.lambda {
            for k in 1..=l.ell_max() {
                row("lambda_hat", k, l.lambda(k), l.lambda_se(k), l.positives);
            }
            let t = l.tail_mass();
            row("lambda_hat_tail", l.ell_max() + 1, t, (t * (1.0 - t) / l.positives as f64).sqrt(), l.positives);
            row("mean_cluster_size", 0, l.mean_cluster_size(), f64::NAN, l.positives);
        }
        if let Some(a) = &self.alpha {
            for (i, (v, se)) in a.alpha_hat.iter().zip(&a.alpha_hat_se).enumerate() {
                row("alpha_hat", i + 1, *v, *se, a.samples);
            }
            for (i, (v, se)) in a.alpha.iter().zip(&a.alpha_se).enumerate() {
                row("alpha", i + 1, *v, *se, a.samples);
            }
            row("extremal_index", 1, a.extremal_index(), a.extremal_index_se(), a.samples);
            row("mean_min_return", 0, a.mean_min_return, a.mean_min_return_se, a.samples);
        }
        out
    }
}
