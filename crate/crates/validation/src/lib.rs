//! Reference computations that share no code with the library under test,
//! used by the acceptance suite.

use rand::Rng;

use hitlab::rng::trial_rng;

/// `sum_n Poisson(t)(n) lambda^{*n}(k)` by explicit convolution powers.
/// `lambda[l - 1]` is the mass of cluster size `l`.
pub fn convolution_pmf(t: f64, lambda: &[f64], k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max + 1];
    let mut power = vec![0.0; k_max + 1];
    power[0] = 1.0;
    let mut weight = (-t).exp();
    for n in 0..=k_max {
        for k in 0..=k_max {
            out[k] += weight * power[k];
        }
        let mut next = vec![0.0; k_max + 1];
        for (i, p) in power.iter().enumerate() {
            for (l, q) in lambda.iter().enumerate() {
                if i + l < k_max {
                    next[i + l + 1] += p * q;
                }
            }
        }
        power = next;
        weight *= t / (n + 1) as f64;
    }
    out
}

/// `lambda_k` of a union of periodic orbits with Pitskel values `thetas`
/// and density weights `weights`; orbit `j` starts clusters at rate
/// `w_j (1 - theta_j)` and each cluster is geometric.
pub fn finite_set_lambda(thetas: &[f64], weights: &[f64], k: usize) -> f64 {
    let rate: f64 = thetas.iter().zip(weights).map(|(t, w)| w * (1.0 - t)).sum();
    thetas
        .iter()
        .zip(weights)
        .map(|(t, w)| w * (1.0 - t) * (1.0 - t) * t.powi(k as i32 - 1))
        .sum::<f64>()
        / rate
}

/// Extremal index of the same union.
pub fn finite_set_extremal_index(thetas: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    thetas.iter().zip(weights).map(|(t, w)| w * (1.0 - t)).sum::<f64>() / total
}

/// Exact `gamma_k(i)` for the doubling map squared returning to `[0, 1/2]`,
/// by enumerating every pattern of the first `i_max` even binary digits.
/// Row `k - 1`, column `i`.
pub fn dyadic_gamma(k_max: usize, i_max: usize) -> Vec<Vec<f64>> {
    assert!(i_max < 32);
    let mut counts = vec![vec![0u64; i_max + 1]; k_max];
    for pattern in 0u32..(1 << i_max) {
        let mut k = 0;
        for i in 1..=i_max {
            // Digit 2i of the start is zero exactly when T^(2i) x < 1/2.
            if pattern >> (i - 1) & 1 == 0 {
                counts[k][i] += 1;
                k += 1;
                if k == k_max {
                    break;
                }
            }
        }
    }
    let total = (1u64 << i_max) as f64;
    counts.iter().map(|r| r.iter().map(|&n| n as f64 / total).collect()).collect()
}

/// `P(x_j in B(center, rho) for some j < block)` under the doubling map from
/// uniform starts, by shifting 128 random bits. Returns the estimate and its
/// binomial standard error.
pub fn doubling_hit_prob(center: f64, rho: f64, block: u32, orbits: u64, seed: u64) -> (f64, f64) {
    assert!(block <= 64);
    let mut rng = trial_rng(seed, 0);
    let mut hits = 0u64;
    for _ in 0..orbits {
        let bits = (rng.random::<u64>() as u128) << 64 | rng.random::<u64>() as u128;
        let hit = (0..block).any(|j| {
            let x = ((bits << j) >> 64) as u64 as f64 / 2f64.powi(64);
            (x - center).abs() <= rho
        });
        hits += hit as u64;
    }
    let p = hits as f64 / orbits as f64;
    (p, (p * (1.0 - p) / orbits as f64).sqrt())
}
