//! Property tests for the invariants of each module.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hitlab::compound::{
    compound_binomial_pmf, compound_poisson_pmf, finite_periodic_spectrum, lambda_from_alpha, total_variation,
    wald_mean, ClusterSpectrum, CompoundLaw,
};
use hitlab::dynamics::{a_sequence, BitWindow, Intermittent, MapSystem, OrbitState, Point};
use hitlab::harness::{parse_kv, ExperimentConfig, MapSpec, ScalingKind, SweepSpec, TargetSpec};
use hitlab::measure::{DensityModel, Histogram};
use hitlab::targets::{horizon, ScalingRule, TargetFamily};

/// Independent oracle: `sum_n Pois(n; t) lambda^{*n}(k)` by repeated convolution.
fn convolution_pmf(t: f64, lambda: &[f64], k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max + 1];
    let mut power = vec![0.0; k_max + 1];
    power[0] = 1.0;
    let mut weight = (-t).exp();
    for n in 0..=k_max {
        for k in 0..=k_max {
            out[k] += weight * power[k];
        }
        let mut next = vec![0.0; k_max + 1];
        for (i, &a) in power.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (l, &p) in lambda.iter().enumerate() {
                if i + l + 1 <= k_max {
                    next[i + l + 1] += a * p;
                }
            }
        }
        power = next;
        weight *= t / (n + 1) as f64;
    }
    out
}

fn spectrum_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 1..=8).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    })
}

fn maps() -> Vec<MapSystem> {
    vec![
        MapSystem::Doubling,
        MapSystem::perturbed(0.1).unwrap(),
        MapSystem::perturbed(-0.05).unwrap(),
        MapSystem::pomeau_manneville(0.25).unwrap(),
        MapSystem::pomeau_manneville(0.5).unwrap(),
    ]
}

fn normalized(mut m: Vec<f64>) -> Vec<f64> {
    let s: f64 = m.iter().sum();
    m.iter_mut().for_each(|x| *x /= s);
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn panjer_matches_convolution(lambda in spectrum_strategy(), ti in 0usize..3) {
        let t = [0.5, 1.0, 2.0][ti];
        let s = ClusterSpectrum::new(lambda.clone(), 0.0).unwrap();
        let panjer = compound_poisson_pmf(t, &s, 50).unwrap();
        let conv = convolution_pmf(t, &lambda, 50);
        for k in 0..=50 {
            prop_assert!((panjer[k] - conv[k]).abs() <= 1e-12, "k={} {} {}", k, panjer[k], conv[k]);
        }
    }

    #[test]
    fn compound_poisson_is_normalized_and_has_wald_mean(lambda in spectrum_strategy(), t in 0.05f64..3.0) {
        let s = ClusterSpectrum::new(lambda, 0.0).unwrap();
        let pmf = compound_poisson_pmf(t, &s, 200).unwrap();
        let total: f64 = pmf.iter().sum();
        prop_assert!(total >= 1.0 - 1e-8);
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        prop_assert!((mean - wald_mean(t, &s).mean).abs() <= 1e-8);
    }

    #[test]
    fn geometric_alpha_gives_the_single_orbit_spectrum(theta in 0.01f64..0.9) {
        let m = 40;
        let alpha: Vec<f64> = (1..=m).map(|k| (1.0 - theta) * theta.powi(k as i32 - 1)).collect();
        let from_alpha = lambda_from_alpha(&alpha).unwrap();
        let (ei, direct) = finite_periodic_spectrum(&[theta], &[1.0], m - 1).unwrap();
        prop_assert!((ei - (1.0 - theta)).abs() <= 1e-12);
        for l in 1..m {
            prop_assert!((from_alpha.lambda(l) - direct.lambda(l)).abs() <= 1e-12, "l={}", l);
        }
    }

    #[test]
    fn spectra_are_normalized(thetas in prop::collection::vec(0.01f64..0.95, 1..5), len in 2usize..50) {
        let weights: Vec<f64> = thetas.iter().map(|t| 1.0 + t).collect();
        let (_, s) = finite_periodic_spectrum(&thetas, &weights, len).unwrap();
        let total: f64 = s.probs().iter().sum::<f64>() + s.tail();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(s.probs().iter().all(|&p| p >= 0.0) && s.tail() >= 0.0);
    }

    #[test]
    fn total_variation_is_a_metric_value(lambda in spectrum_strategy(), t in 0.1f64..3.0, u in 0.1f64..3.0) {
        let s = ClusterSpectrum::new(lambda, 0.0).unwrap();
        let a = CompoundLaw::CompoundPoisson { t, spectrum: s.clone() }.pmf_table(40).unwrap();
        let b = CompoundLaw::Poisson { t: u }.pmf_table(40).unwrap();
        let d = total_variation(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - total_variation(&b, &a).unwrap()).abs() < 1e-15);
        prop_assert_eq!(total_variation(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn compound_binomial_approaches_compound_poisson(lambda in spectrum_strategy(), t in 0.3f64..2.0) {
        let s = ClusterSpectrum::new(lambda, 0.0).unwrap();
        let cp = CompoundLaw::CompoundPoisson { t, spectrum: s.clone() }.pmf_table(60).unwrap();
        let mut last = f64::INFINITY;
        for n in [100u64, 1_000, 10_000] {
            let cb = CompoundLaw::CompoundBinomial { trials: n, p: t / n as f64, spectrum: s.clone() }
                .pmf_table(60)
                .unwrap();
            let d = total_variation(&cb, &cp).unwrap();
            prop_assert!(d < last, "n={} d={} last={}", n, d, last);
            last = d;
        }
        let direct = compound_binomial_pmf(10, 0.5, &s, 5).unwrap();
        prop_assert!(direct.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn steps_follow_the_formula(seed in any::<u64>(), mi in 0usize..5) {
        let map = &maps()[mi];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = map.uniform_state(&mut rng);
        for _ in 0..20 {
            let x = s.value();
            map.step(&mut s, &mut rng);
            let want = map.apply_scalar(x).unwrap();
            // Top 53 bits of the doubling window, one rounding for floats.
            let tol = if matches!(map, MapSystem::Doubling) { 2f64.powi(-52) } else { 1e-15 };
            let diff = (s.value() - want).abs();
            prop_assert!(diff <= tol || (1.0 - diff) <= tol, "{} vs {}", s.value(), want);
        }
    }

    #[test]
    fn chain_rule_matches_finite_differences(x in 0.001f64..0.999, mi in 0usize..5, p in 1usize..4) {
        let map = &maps()[mi];
        let h = 1e-9;
        let mut y = x;
        let mut yh = x + h;
        let mut deriv: f64 = 1.0;
        for _ in 0..p {
            // Skip orbits that pass near a branch boundary.
            prop_assume!((y - 0.5).abs() > 10.0 * h * deriv.max(1.0) && y > 10.0 * h);
            deriv *= map.derivative(y).unwrap();
            y = map.apply_scalar(y).unwrap();
            yh = map.apply_scalar(yh).unwrap();
            prop_assume!((yh - y).abs() < 0.5);
        }
        let fd = (yh - y) / h;
        prop_assert!((fd / deriv - 1.0).abs() < 1e-4, "fd {} deriv {}", fd, deriv);
    }

    #[test]
    fn bit_windows_hold_their_value(bits in any::<u64>()) {
        let x = (bits >> 11) as f64 / (1u64 << 53) as f64;
        prop_assert_eq!(BitWindow::from_value(x).value(), x);
    }

    #[test]
    fn periodic_doubling_points_have_pitskel_value_in_unit_interval(p in 1usize..12, j in 1u64..100) {
        let den = (1u64 << p) - 1;
        let num = j % den;
        let x = num as f64 / den as f64;
        let m = MapSystem::Doubling;
        let q = m.minimal_period(x, 12, 1e-9).unwrap();
        let theta = m.pitskel_value(x, q, 1e-9).unwrap();
        prop_assert!(theta > 0.0 && theta < 1.0);
        prop_assert_eq!(theta, 2f64.powi(-(q as i32)));
        prop_assert!(p % q == 0);
    }

    #[test]
    fn histogram_measure_is_additive(masses in prop::collection::vec(0.0f64..1.0, 4..64), a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        prop_assume!(masses.iter().sum::<f64>() > 0.0);
        let mut v = [a, b, c];
        v.sort_by(f64::total_cmp);
        let [a, b, c] = v;
        let d = DensityModel::Histogram(Histogram::from_masses(normalized(masses)).unwrap());
        let lhs = d.interval_measure(a, b) + d.interval_measure(b, c);
        prop_assert!((lhs - d.interval_measure(a, c)).abs() <= 1e-12);
        prop_assert!((d.interval_measure(0.0, 1.0) - 1.0).abs() <= 1e-12);
        let l = DensityModel::ExactLebesgue;
        prop_assert!((l.interval_measure(a, b) + l.interval_measure(b, c) - l.interval_measure(a, c)).abs() <= 1e-15);
    }

    #[test]
    fn density_csv_round_trips(masses in prop::collection::vec(0.001f64..1.0, 2..40)) {
        let d = DensityModel::Histogram(Histogram::from_masses(normalized(masses)).unwrap());
        let back = DensityModel::from_csv(&d.to_csv().unwrap()).unwrap();
        for i in 0..20 {
            let x = i as f64 / 20.0;
            prop_assert!((back.interval_measure(0.0, x) - d.interval_measure(0.0, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_unions_measure_the_sum(rho_exp in 6i32..24) {
        let rho = 2f64.powi(-rho_exp);
        let d = DensityModel::ExactLebesgue;
        let u = TargetFamily::union(vec![0.0, 1.0 / 3.0], rho, true).unwrap();
        prop_assert!((u.measure(&d).unwrap() - 4.0 * rho).abs() < 1e-15);
        prop_assert!(TargetFamily::union(vec![0.3, 0.3 + rho], rho, false).is_err());
    }

    #[test]
    fn kac_horizon_is_t_over_measure(t in 0.1f64..4.0, rho_exp in 4i32..20) {
        let rho = 2f64.powi(-rho_exp);
        let target = TargetFamily::ball(0.4, rho, false).unwrap();
        let n = horizon(&ScalingRule::Kac { t }, &target, &DensityModel::ExactLebesgue, None).unwrap();
        prop_assert_eq!(n, (t / (2.0 * rho)).round().max(1.0) as u64);
    }

    #[test]
    fn ball_membership_matches_the_interval(center in 0.0f64..1.0, rho in 1e-6f64..0.1, x in 0.0f64..1.0) {
        let b = TargetFamily::ball(center, rho, false).unwrap();
        let inside = (x - center).abs() <= rho;
        prop_assert_eq!(b.contains(Point::Line(x)), inside);
    }

    #[test]
    fn configs_round_trip(
        seed in any::<u64>(),
        rho_exp in 4i32..30,
        center in 0.0f64..1.0,
        eps in -0.15f64..0.15,
        alpha in 0.05f64..0.95,
        block in 2u64..5000,
        kac in any::<bool>(),
        kind in 0usize..4,
        values in prop::collection::btree_set(1usize..10_000, 2..6),
    ) {
        let mut c = ExperimentConfig::base("periodic_single");
        c.seed = seed;
        c.scaling.block = block;
        c.scaling.kind = if kac { ScalingKind::Kac } else { ScalingKind::Empirical };
        let rho = 2f64.powi(-rho_exp);
        match kind {
            0 => c.target = TargetSpec::Ball { center, rho, wrap: kac },
            1 => {
                c.map = MapSpec::Product(Box::new(MapSpec::Doubling), Box::new(MapSpec::Perturbed { eps }));
                c.target = TargetSpec::Strip { x: center, a: 0.1, b: 0.7, rho };
            }
            2 => {
                c.map = MapSpec::Pm { alpha };
                c.target = TargetSpec::ParabolicLevel { n: 50 };
                c.sweep = Some(SweepSpec::Level(values.into_iter().collect()));
            }
            _ => {
                c.target = TargetSpec::Union { centers: vec![center / 3.0, 0.5 + center / 3.0], rho, wrap: false };
                c.sweep = Some(SweepSpec::Rho(vec![0.5, 0.25, rho]));
            }
        }
        let back = ExperimentConfig::from_kv(&parse_kv(&c.echo()).unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }
}

#[test]
fn a_sequence_decreases_and_maps_back_to_one() {
    for alpha in [0.25, 0.5, 0.75, 1.0] {
        let a = a_sequence(alpha, 50).unwrap();
        assert!(a.windows(2).all(|w| w[1] < w[0]), "alpha {alpha}");
        // Every a_n with n >= 1 lies in the closure of the left branch, and
        // its n-th left-branch image is a_0 = 1.
        let pm = Intermittent::new(alpha).unwrap();
        for n in 1..=50 {
            let mut x = a[n];
            for _ in 0..n {
                x = pm.left(x);
            }
            assert!((x - 1.0).abs() < 1e-8, "alpha {alpha} n {n}: {x}");
        }
    }
}

#[test]
fn doubling_keeps_rational_orbits_exact() {
    let map = MapSystem::Doubling;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut s = OrbitState::Bits(BitWindow::from_rational(1, 3).unwrap());
    for i in 0..500 {
        let want = if i % 2 == 0 { 1.0 / 3.0 } else { 2.0 / 3.0 };
        assert!((s.value() - want).abs() < 1e-15, "step {i}");
        map.step(&mut s, &mut rng);
    }
}
