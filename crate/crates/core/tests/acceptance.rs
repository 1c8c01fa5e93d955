//! End-to-end acceptance checks. Each check prints one `PASS`/`FAIL` line;
//! the process exits non-zero if any check fails.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use dod_core::analytic::{gamma1_square, gamma_square, j2_functional, square_cdf, square_supnorm_law};
use dod_core::bootstrap::BootstrapConfig;
use dod_core::dod::{alternative_variance, dod_statistic, SpaceKernels, VARIANCE_NODES};
use dod_core::dtm::dtm_statistic;
use dod_core::exec::{derive_seed, rng_from};
use dod_core::harness::{run_null_distribution, run_power, DtmPlan, ExperimentPlan, Method};
use dod_core::limit::{build_limit_grid, sample_xi, DEFAULT_JITTER};
use dod_core::spaces::{sample, Metric, PointSample, SpaceSpec};
use dod_core::stats::{ks_two_sample, mean, std_error};
use dod_core::ustat::partition_pairs;
use rand::Rng;

type Check = Result<String, String>;
type NamedCheck = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn euclid_square() -> SpaceSpec {
    SpaceSpec::unit_square(Metric::Euclidean)
}

fn sup_square() -> SpaceSpec {
    SpaceSpec::unit_square(Metric::SupNorm)
}

fn power_plan(b: SpaceSpec, n: usize, beta: f64, reps: usize, r: usize, method: Method, seed: u64) -> ExperimentPlan {
    let mut bootstrap = BootstrapConfig::untrimmed(r, seed ^ 0xB007).unwrap();
    bootstrap.allow_untrimmed = beta == 0.0;
    ExperimentPlan {
        name: "acceptance".into(),
        space_a: euclid_square(),
        space_b: b,
        n_list: vec![n],
        beta,
        alpha: 0.05,
        replications: reps,
        bootstrap,
        method,
        seed,
        calibrate_each_replication: false,
        dtm: DtmPlan::default(),
    }
}

fn rate(plan: &ExperimentPlan) -> Result<f64, String> {
    let rows = run_power(plan).map_err(|e| e.to_string())?;
    Ok(rows[0].rejection_rate)
}

fn j2_exactness() -> Check {
    let j = j2_functional(&square_supnorm_law()).map_err(|e| e.to_string())?;
    ensure((j - 5.0 / 48.0).abs() < 1e-6, format!("J2 = {j:.12}, target 5/48 = {:.12}", 5.0 / 48.0))
}

fn closed_form_identities() -> Check {
    let law = square_supnorm_law();
    let mut worst_inv = 0.0f64;
    for k in 0..1000 {
        let t = (k as f64 + 0.5) / 1000.0;
        worst_inv = worst_inv.max((square_cdf(law.quantile(t)) - t).abs());
    }
    let h = 1e-5;
    let mut worst_der = 0.0f64;
    for k in 1..1000 {
        let s = k as f64 / 1000.0;
        let cd = (square_cdf(s + h) - square_cdf(s - h)) / (2.0 * h);
        worst_der = worst_der.max((cd - law.density(s)).abs());
    }
    let g = gamma1_square(1.0, 1.0).map_err(|e| e.to_string())?;
    ensure(
        worst_inv < 1e-10 && worst_der < 1e-6 && g == 1.0,
        format!("max |U(U⁻¹(t)) − t| = {worst_inv:.2e}, max derivative error = {worst_der:.2e}, Γ₁(1,1) = {g}"),
    )
}

fn sorted_distances(x: &PointSample) -> Vec<f64> {
    let pts: Vec<&[f64]> = x.points().collect();
    let mut d = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let s: f64 = pts[i].iter().zip(pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d.push(s.sqrt());
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

fn left_quantile(sorted: &[f64], t: f64) -> f64 {
    let k = (t * sorted.len() as f64).ceil() as usize;
    sorted[k.clamp(1, sorted.len()) - 1]
}

fn statistic_oracle() -> Check {
    let mut rng = rng_from(31);
    let nodes = 1_000_000usize;
    let mut worst = 0.0f64;
    for inst in 0..50u64 {
        let n = rng.random_range(3..=12);
        let mut m = rng.random_range(3..=12);
        if m == n {
            m += 1;
        }
        let beta = if inst % 2 == 0 { 0.0 } else { rng.random_range(0.0..0.2) };
        let x = sample(&euclid_square(), n, derive_seed(inst, &[0])).unwrap();
        let y = sample(&euclid_square(), m, derive_seed(inst, &[1])).unwrap();
        let got = dod_statistic(&x, &y, beta, 2.0).map_err(|e| e.to_string())?.statistic;
        let (a, b) = (sorted_distances(&x), sorted_distances(&y));
        let w = (1.0 - 2.0 * beta) / nodes as f64;
        let riemann: f64 = (0..nodes)
            .map(|i| {
                let t = beta + (i as f64 + 0.5) * w;
                let d = left_quantile(&a, t) - left_quantile(&b, t);
                d * d
            })
            .sum::<f64>()
            * w;
        worst = worst.max((got - riemann).abs());
    }
    let mut equal_ok = true;
    for inst in 0..50u64 {
        let n = 3 + (inst as usize % 20);
        let x = sample(&euclid_square(), n, derive_seed(1000 + inst, &[0])).unwrap();
        let y = sample(&euclid_square(), n, derive_seed(1000 + inst, &[1])).unwrap();
        let got = dod_statistic(&x, &y, 0.0, 2.0).unwrap().statistic;
        let (a, b) = (sorted_distances(&x), sorted_distances(&y));
        let sum: f64 = a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / a.len() as f64;
        equal_ok &= got == sum;
    }
    ensure(
        worst < 1e-6 && equal_ok,
        format!("max |statistic − Riemann oracle| over 50 unequal-size cases = {worst:.2e}; equal-size order-statistic sum exact: {equal_ok}"),
    )
}

fn partition_invariants() -> Check {
    for n in 3..=60usize {
        let p = partition_pairs(n).map_err(|e| e.to_string())?;
        let (groups, size) = if n % 2 == 0 { (n - 1, n / 2) } else { (n, (n - 1) / 2) };
        if p.groups.len() != groups || p.groups.iter().any(|g| g.len() != size) {
            return Err(format!("wrong shape at n = {n}"));
        }
        let mut seen = HashSet::new();
        for g in &p.groups {
            let mut used = HashSet::new();
            for &(i, j) in g {
                if !(1 <= i && i < j && j <= n) || !used.insert(i) || !used.insert(j) || !seen.insert((i, j)) {
                    return Err(format!("invalid or repeated pair ({i}, {j}) at n = {n}"));
                }
            }
        }
        if seen.len() != n * (n - 1) / 2 {
            return Err(format!("pairs missing at n = {n}"));
        }
    }
    Ok("partition, vertex-disjointness and group sizes hold for 3 ≤ n ≤ 60".into())
}

fn finite_sample_bound() -> Check {
    let n = 50;
    let scaled = run_null_distribution(&sup_square(), n, 0.0, 2000, 5).map_err(|e| e.to_string())?;
    let raw: Vec<f64> = scaled.iter().map(|s| s / (n as f64 / 2.0)).collect();
    let (m, se) = (mean(&raw), std_error(&raw));
    let bound = 16.0 / (n as f64 + 1.0) * 5.0 / 48.0;
    ensure(
        m <= bound + 3.0 * se,
        format!("mean DoD = {m:.5} ± {se:.5}, bound 16/51·5/48 = {bound:.5}"),
    )
}

fn limit_agreement() -> Check {
    let null = run_null_distribution(&sup_square(), 250, 0.01, 2000, 6).map_err(|e| e.to_string())?;
    let grid = build_limit_grid(&square_supnorm_law(), &gamma_square, 0.01, 512, DEFAULT_JITTER)
        .map_err(|e| e.to_string())?;
    let xi = sample_xi(&grid, 2000, 7).map_err(|e| e.to_string())?;
    let ks = ks_two_sample(&null, &xi);
    ensure(
        ks <= 0.1,
        format!("KS distance = {ks:.4}; means {:.4} vs {:.4}", mean(&null), mean(&xi)),
    )
}

fn bootstrap_level() -> Check {
    let b = SpaceSpec::square_cap_disc(std::f64::consts::SQRT_2 / 2.0);
    let r = rate(&power_plan(b, 100, 0.01, 500, 300, Method::DoD, 8))?;
    ensure((0.01..=0.09).contains(&r), format!("null rejection rate = {r:.3}"))
}

fn bootstrap_power() -> Check {
    let a = rate(&power_plan(SpaceSpec::square_cap_disc(0.5), 250, 0.01, 200, 1000, Method::DoD, 9))?;
    let b = rate(&power_plan(SpaceSpec::square_cap_disc(0.55), 250, 0.01, 200, 1000, Method::DoD, 10))?;
    ensure(
        a >= 0.95 && (0.60..=0.85).contains(&b),
        format!("power r = 0.5: {a:.3}; r = 0.55: {b:.3}"),
    )
}

fn independent_deficit() -> Check {
    let b = || SpaceSpec::square_cap_disc(0.55);
    let full = rate(&power_plan(b(), 250, 0.01, 200, 1000, Method::DoD, 11))?;
    let ind = rate(&power_plan(b(), 250, 0.01, 200, 1000, Method::DoDIndependent, 12))?;
    ensure(ind <= full - 0.3, format!("all-pairs power {full:.3}, independent-pairs power {ind:.3}"))
}

fn trimming_sensitivity() -> Check {
    let mut detail = Vec::new();
    let mut ok = true;
    for (i, beta) in [0.0, 0.01, 0.05, 0.25].into_iter().enumerate() {
        let level = rate(&power_plan(euclid_square(), 250, beta, 300, 1000, Method::DoD, 20 + i as u64))?;
        ok &= (0.01..=0.09).contains(&level);
        detail.push(format!("level β={beta}: {level:.3}"));
    }
    let p0 = rate(&power_plan(SpaceSpec::square_cap_disc(0.55), 250, 0.0, 300, 1000, Method::DoD, 30))?;
    let p25 = rate(&power_plan(SpaceSpec::square_cap_disc(0.55), 250, 0.25, 300, 1000, Method::DoD, 31))?;
    ok &= p25 <= p0 - 0.05;
    detail.push(format!("power β=0: {p0:.3}, β=0.25: {p25:.3}"));
    ensure(ok, detail.join("; "))
}

fn dtm_baseline() -> Check {
    let mut plan = power_plan(SpaceSpec::square_cap_disc(0.5), 500, 0.01, 200, 20, Method::Dtm, 40);
    plan.dtm = DtmPlan {
        kappa: 0.1,
        n_s: Some(500 / 15),
        replications: 1000,
    };
    let r = rate(&plan)?;
    let x = sample(&euclid_square(), 500, 41).unwrap();
    let same = dtm_statistic(&x, &x, 0.1, 33).map_err(|e| e.to_string())?;
    ensure(
        (0.80..=0.98).contains(&r) && same == 0.0,
        format!("DTM power = {r:.3}; identical-sample statistic = {same}"),
    )
}

fn spiral_separation() -> Check {
    let mk = |a: f64, b: f64, seed| {
        let mut p = power_plan(SpaceSpec::spiral(b), 500, 0.01, 200, 1000, Method::DoD, seed);
        p.space_a = SpaceSpec::spiral(a);
        p
    };
    let power = rate(&mk(100.0, 10.0, 50))?;
    let level = rate(&mk(10.0, 10.0, 51))?;
    ensure(
        power >= 0.95 && (0.01..=0.09).contains(&level),
        format!("power v=10 vs v=100: {power:.3}; level v=10 vs v=10: {level:.3}"),
    )
}

fn invariance_suite() -> Check {
    let mut worst_rigid = 0.0f64;
    let mut symmetric = true;
    let mut monotone = true;
    for k in 0..20u64 {
        let x = sample(&euclid_square(), 40, derive_seed(k, &[0])).unwrap();
        let y = sample(&SpaceSpec::square_cap_disc(0.55), 35, derive_seed(k, &[1])).unwrap();
        let theta = 0.3 + k as f64;
        let (c, s) = (theta.cos(), theta.sin());
        let moved = x
            .map_points(|p| vec![c * p[0] - s * p[1] + 5.0, -(s * p[0] + c * p[1]) - 2.0])
            .unwrap();
        let base = dod_statistic(&x, &y, 0.01, 2.0).unwrap().statistic;
        let rigid = dod_statistic(&moved, &y, 0.01, 2.0).unwrap().statistic;
        worst_rigid = worst_rigid.max((rigid - base).abs() / base);
        symmetric &= dod_statistic(&y, &x, 0.01, 2.0).unwrap().statistic == base;
        let mut prev = f64::INFINITY;
        for beta in [0.0, 0.01, 0.05, 0.1, 0.25, 0.4, 0.49] {
            let v = dod_statistic(&x, &y, beta, 2.0).unwrap().statistic;
            monotone &= v <= prev;
            prev = v;
        }
    }
    let law = square_supnorm_law();
    let q = |t: f64| law.quantile(t);
    let cdf = |t: f64| square_cdf(t);
    let kern = SpaceKernels {
        quantile: &q,
        cdf: &cdf,
        gamma: &gamma_square,
    };
    let var = alternative_variance(&kern, &kern, 0.01, 0.5, VARIANCE_NODES).map_err(|e| e.to_string())?;
    ensure(
        worst_rigid <= 1e-12 && symmetric && monotone && var.abs() < 1e-12,
        format!(
            "rigid-motion relative change {worst_rigid:.1e}; symmetric {symmetric}; monotone in β {monotone}; null alternative variance {var:.1e}"
        ),
    )
}

fn main() -> ExitCode {
    let checks: [NamedCheck; 13] = [
        ("J2 of the sup-norm square law", j2_exactness),
        ("closed-form identities", closed_form_identities),
        ("statistic against quadrature oracle", statistic_oracle),
        ("pair partition invariants", partition_invariants),
        ("finite-sample expectation bound", finite_sample_bound),
        ("null statistic against limit law", limit_agreement),
        ("bootstrap test level", bootstrap_level),
        ("bootstrap test power", bootstrap_power),
        ("independent-distance deficit", independent_deficit),
        ("trimming sensitivity", trimming_sensitivity),
        ("distance-to-measure baseline", dtm_baseline),
        ("spiral separation", spiral_separation),
        ("invariance suite", invariance_suite),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let res = check();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("PASS {id:>2} {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance check(s) failed");
        ExitCode::FAILURE
    }
}
