//! Reference values checked against independently computed oracles.

use std::f64::consts::{PI, SQRT_2};

use dod_core::analytic::quadrature::{adaptive, GaussLegendre};
use dod_core::analytic::{
    disc_euclid_density, gamma1_square, gamma_square, j2_functional, square_cdf, square_supnorm_law,
    union_squares_density, ConditionalCdfKernel,
};
use dod_core::bootstrap::{bootstrap_quantile, BootstrapConfig, BootstrapSource};
use dod_core::dod::{dod_from_distances, dod_statistic, independent_distances};
use dod_core::exec::{derive_seed, rng_from, Execution};
use dod_core::harness::run_null_distribution;
use dod_core::limit::{build_limit_grid, limit_critical_value, sample_xi, DEFAULT_JITTER};
use dod_core::spaces::{sample, spiral_point, Metric, Point, PointSample, SpaceSpec};
use dod_core::stats::{ks_one_sample, ks_two_sample, mean, order_statistic, sort_floats, std_error};
use dod_core::ustat::{kantorovich_1d, pairwise, partition_pairs, u_cdf, u_quantile, DistanceSample, StepQuantile};
use rand::Rng;

fn sup_square() -> SpaceSpec {
    SpaceSpec::unit_square(Metric::SupNorm)
}

fn sq(pts: &[[f64; 2]], metric: Metric) -> PointSample {
    PointSample::new(pts.iter().map(|p| Point(p.to_vec())).collect(), metric, 0).unwrap()
}

#[test]
fn pairwise_small_triangle() {
    let d = pairwise(&sq(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], Metric::Euclidean)).unwrap();
    assert_eq!(d.distances(), &[1.0, 1.0, SQRT_2]);
    assert!((u_cdf(&d, 1.0) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(u_quantile(&d, 0.5).unwrap(), 1.0);
    assert_eq!(u_quantile(&d, 1.0).unwrap(), SQRT_2);
    assert_eq!(u_quantile(&d, 1e-9).unwrap(), 1.0);
    assert!(u_quantile(&d, 0.0).is_err());
}

#[test]
fn pairwise_sizes() {
    let x = sample(&sup_square(), 6, 1).unwrap();
    assert_eq!(pairwise(&x).unwrap().len(), 15);
    let same = sq(&[[0.2, 0.2], [0.2, 0.2]], Metric::SupNorm);
    assert_eq!(pairwise(&same).unwrap().distances(), &[0.0]);
}

#[test]
fn partition_small_cases() {
    let p = partition_pairs(4).unwrap();
    assert_eq!(p.groups.len(), 3);
    let mut all: Vec<(usize, usize)> = p.groups.concat();
    all.sort();
    assert_eq!(all, vec![(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
    let six = partition_pairs(6).unwrap();
    assert_eq!((six.groups.len(), six.groups[0].len()), (5, 3));
    let seven = partition_pairs(7).unwrap();
    assert_eq!(seven.groups.len(), 7);
    assert!(seven.groups.iter().all(|g| g.len() == 3));
}

/// `Σ_ij λ_ij |a_(i) − b_(j)|^p` with the weights written out for pair counts.
fn lambda_weight_sum(a: &[f64], b: &[f64], p: f64) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut s = 0.0;
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let (i1, j1) = (i as f64 + 1.0, j as f64 + 1.0);
            let hi = (i1 / n).min(j1 / m);
            let lo = ((i1 - 1.0) / n).max((j1 - 1.0) / m);
            if hi > lo {
                s += (hi - lo) * (x - y).abs().powf(p);
            }
        }
    }
    s
}

#[test]
fn unequal_sizes_match_weight_formula() {
    let mut rng = rng_from(3);
    for _ in 0..40 {
        let a: Vec<f64> = (0..rng.random_range(1..30)).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..rng.random_range(1..30)).map(|_| 2.0 * rng.random::<f64>()).collect();
        let (qa, qb) = (StepQuantile::new(a).unwrap(), StepQuantile::new(b).unwrap());
        for p in [1.0, 2.0, 3.0] {
            let got = kantorovich_1d(&qa, &qb, p, 0.0).unwrap();
            let want = lambda_weight_sum(qa.values(), qb.values(), p);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }
}

#[test]
fn kantorovich_examples() {
    let q = |v: Vec<f64>| StepQuantile::new(v).unwrap();
    assert_eq!(kantorovich_1d(&q(vec![0.0]), &q(vec![1.0]), 1.0, 0.0).unwrap(), 1.0);
    let v = kantorovich_1d(&q(vec![1.0, 2.0, 3.0]), &q(vec![1.0, 2.0, 4.0]), 2.0, 0.0).unwrap();
    assert!((v - 1.0 / 3.0).abs() < 1e-15);
    let a = q(vec![0.3, 0.1, 0.7]);
    assert_eq!(kantorovich_1d(&a, &a, 2.0, 0.2).unwrap(), 0.0);
}

#[test]
fn statistic_from_distance_lists() {
    let x = DistanceSample::from_distances(vec![1.0, 2.0, 3.0], 3).unwrap();
    let y = DistanceSample::from_distances(vec![1.0, 2.0, 4.0], 3).unwrap();
    let r = dod_from_distances(&x, &y, 0.0, 2.0).unwrap();
    assert!((r.statistic - 1.0 / 3.0).abs() < 1e-15);
    assert!((r.scaled - 0.5).abs() < 1e-15);
    assert!(DistanceSample::from_distances(vec![1.0, 2.0], 3).is_err());
}

#[test]
fn independent_variant_uses_half_the_points() {
    let x = sample(&sup_square(), 4, 2).unwrap();
    assert_eq!(independent_distances(&x).unwrap().len(), 2);
}

#[test]
fn null_mean_below_expectation_bound() {
    let n = 100;
    let scaled = run_null_distribution(&sup_square(), n, 0.01, 400, 17).unwrap();
    let raw: Vec<f64> = scaled.iter().map(|s| s * 2.0 / n as f64).collect();
    let bound = (8.0 / 101.0 + 8.0 / 101.0) * 5.0 / 48.0;
    assert!(mean(&raw) <= bound + 3.0 * std_error(&raw));
}

#[test]
fn square_cap_disc_fraction_inside_half_radius() {
    // Area oracle: fraction of the region within radius 0.5 of the centre,
    // estimated by rejection from the square with an independent generator.
    let r = SQRT_2 / 2.0;
    let mut rng = rng_from(99);
    let (mut region, mut inner) = (0usize, 0usize);
    for _ in 0..400_000 {
        let (x, y) = (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let d2 = x * x + y * y;
        if d2 <= r * r {
            region += 1;
            if d2 <= 0.25 {
                inner += 1;
            }
        }
    }
    let oracle = inner as f64 / region as f64;
    assert!((oracle - PI / 4.0).abs() < 0.01);
    let s = sample(&SpaceSpec::square_cap_disc(r), 1000, 5).unwrap();
    let frac = s.points().filter(|p| p[0] * p[0] + p[1] * p[1] <= 0.25).count() as f64 / 1000.0;
    let sigma = (oracle * (1.0 - oracle) / 1000.0).sqrt();
    assert!((frac - oracle).abs() < 4.0 * sigma, "{frac} vs {oracle}");
}

#[test]
fn spiral_examples() {
    let p = spiral_point(PI / 2.0, 0.0, 1.0, 0.7, -0.3);
    assert!((p.0[0] - 1.0).abs() < 1e-15 && p.0[1].abs() < 1e-15);
    assert_eq!(spiral_point(10.0, 0.0, 0.0, 1.0, 1.0).0, vec![0.0, 0.0]);
    let spec = SpaceSpec::new(
        dod_core::spaces::Family::Spiral { v: 10.0, noise: 0.0 },
        Metric::Euclidean,
    );
    let s = sample(&spec, 10_000, 8).unwrap();
    let radii: Vec<f64> = s.points().map(|p| p[0].hypot(p[1])).collect();
    assert!(ks_one_sample(&radii, |r| r.clamp(0.0, 1.0)) < 1.36 / 100.0 * 1.5);
}

#[test]
fn square_distances_follow_closed_form_cdf() {
    let x = sample(&sup_square(), 2000, 12).unwrap();
    let d = pairwise(&x).unwrap();
    assert!(ks_one_sample(d.distances(), square_cdf) < 0.05);
}

#[test]
fn disc_density_matches_histogram() {
    let law = disc_euclid_density();
    let expect = 4.0 * (2.0 / PI * 0.5f64.acos() - 0.75f64.sqrt() / PI);
    assert!((law.density(0.5) - expect).abs() < 1e-14);
    let (total, _) = adaptive(|s| law.density(s), 0.0, 1.0, 1e-12);
    assert!((total - 1.0).abs() < 1e-8);
    let spec = SpaceSpec::disc(0.5, Metric::Euclidean);
    let n = 1_000_000;
    let pts = sample(&spec, 2 * n, 21).unwrap();
    let (lo, hi) = (0.49, 0.51);
    let hits = (0..n)
        .filter(|&k| (lo..hi).contains(&pts.distance(2 * k, 2 * k + 1)))
        .count() as f64;
    let (mass, _) = adaptive(|s| law.density(s), lo, hi, 1e-13);
    let sigma = (n as f64 * mass * (1.0 - mass)).sqrt();
    assert!((hits - n as f64 * mass).abs() < 4.0 * sigma, "{hits} vs {}", n as f64 * mass);
}

#[test]
fn union_law_examples() {
    let law = union_squares_density();
    assert!((law.cdf(1.0) - 0.5).abs() < 1e-12);
    assert_eq!(law.density(2.0), 0.0);
    assert_eq!(law.density(4.5), 0.25);
}

#[test]
fn gamma1_against_conditional_monte_carlo() {
    // F(t|x) = ℓ(x₁,t)·ℓ(x₂,t) with ℓ(a,t) = |[a−t, a+t] ∩ [0,1]|.
    let ell = |a: f64, t: f64| ((a + t).min(1.0) - (a - t).max(0.0)).max(0.0);
    let mut rng = rng_from(4);
    let vals: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
            ell(a, 0.3) * ell(b, 0.3) * ell(a, 0.2) * ell(b, 0.2)
        })
        .collect();
    let g = gamma1_square(0.3, 0.2).unwrap();
    assert!((mean(&vals) - g).abs() < 3.0 * std_error(&vals));
}

#[test]
fn monte_carlo_kernel_matches_closed_form() {
    let k = ConditionalCdfKernel::estimate(&sup_square(), 2000, 1000, 6).unwrap();
    for &(s, t) in &[(0.3, 0.2), (0.5, 0.5), (0.1, 0.8), (0.7, 0.6)] {
        let (g, se) = k.gamma_with_stderr(s, t);
        assert!((g - gamma_square(s, t)).abs() < 3.5 * se + 1e-4, "({s},{t}): {g} ± {se}");
    }
    for t in [0.05, 0.2, 0.5, 0.9] {
        assert!(k.gamma(t, t) >= 0.0);
    }
    assert!(k.gamma(1.0, 1.0).abs() < 1e-12);
}

#[test]
fn j2_of_disc_is_stable() {
    let law = disc_euclid_density();
    let j = j2_functional(&law).unwrap();
    let (direct, ok) = adaptive(
        |x| {
            let u = law.density(x);
            if u > 0.0 {
                let c = law.cdf(x);
                c * (1.0 - c) / u
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        1e-9,
    );
    assert!(ok);
    assert!(j > 0.0 && (j - direct).abs() < 1e-5, "{j} vs {direct}");
}

fn square_grid(beta: f64, k: usize) -> dod_core::limit::LimitGrid {
    build_limit_grid(&square_supnorm_law(), &gamma_square, beta, k, DEFAULT_JITTER).unwrap()
}

#[test]
fn limit_mean_matches_variance_integral() {
    let beta = 0.01;
    let g = square_grid(beta, 256);
    let law = square_supnorm_law();
    let var = |t: f64| {
        let q = law.quantile(t);
        let u = law.density(q);
        4.0 * (gamma1_square(q, q).unwrap() - square_cdf(q).powi(2)) / (u * u)
    };
    let oracle: f64 = GaussLegendre::new(200).integrate(beta, 1.0 - beta, var);
    let draws = sample_xi(&g, 10_000, 3).unwrap();
    assert!((mean(&draws) - oracle).abs() < 3.0 * std_error(&draws), "{} vs {oracle}", mean(&draws));
    assert!(draws.iter().all(|&x| x >= 0.0));
}

#[test]
fn limit_quantile_converges_in_grid_size() {
    let q = |k| limit_critical_value(&square_grid(0.01, k), 0.05, 10_000, 5).unwrap();
    let (a, b) = (q(256), q(512));
    assert!((a - b).abs() / b < 0.03, "{a} vs {b}");
}

#[test]
fn limit_quantile_stable_across_seeds() {
    let g = square_grid(0.01, 512);
    let a = limit_critical_value(&g, 0.05, 10_000, 1).unwrap();
    let b = limit_critical_value(&g, 0.05, 10_000, 2).unwrap();
    assert!((a - b).abs() / a < 0.05);
}

#[test]
fn limit_factor_positive_semidefinite() {
    let g = square_grid(0.01, 512);
    assert!(g.reconstruction_error() <= g.jitter() + 1e-8);
}

#[test]
fn bootstrap_mean_matches_null_mean() {
    let n = 100;
    let x = sample(&sup_square(), n, 70).unwrap();
    let cfg = BootstrapConfig::new(1000, 0.01, 71).unwrap();
    let src = BootstrapSource::new(&x).unwrap();
    let star = src.draws(&cfg, Execution::default()).unwrap();
    let null = run_null_distribution(&sup_square(), n, 0.01, 1000, 72).unwrap();
    let sigma = (std_error(&star).powi(2) + std_error(&null).powi(2)).sqrt();
    assert!((mean(&star) - mean(&null)).abs() < 3.0 * sigma, "{} vs {}", mean(&star), mean(&null));
}

#[test]
fn bootstrap_quantile_near_limit_quantile() {
    let x = sample(&sup_square(), 250, 80).unwrap();
    let cfg = BootstrapConfig::new(1000, 0.01, 81).unwrap();
    let boot = bootstrap_quantile(&x, &cfg, 0.95).unwrap();
    let lim = limit_critical_value(&square_grid(0.01, 512), 0.05, 10_000, 82).unwrap();
    assert!((boot - lim).abs() / lim < 0.15, "{boot} vs {lim}");
}

#[test]
fn null_statistic_against_limit_draws() {
    let null = run_null_distribution(&sup_square(), 250, 0.01, 2000, 90).unwrap();
    let xi = sample_xi(&square_grid(0.01, 512), 2000, 91).unwrap();
    assert!(ks_two_sample(&null, &xi) <= 0.1);
}

#[test]
fn order_statistic_and_seeds() {
    let mut v = vec![3.0, 1.0, 2.0];
    sort_floats(&mut v);
    assert_eq!(order_statistic(&v, 0.5), 2.0);
    assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[1]));
}

#[test]
fn statistic_of_same_points_is_zero() {
    let x = sample(&sup_square(), 30, 1).unwrap();
    assert_eq!(dod_statistic(&x, &x, 0.05, 2.0).unwrap().statistic, 0.0);
}
