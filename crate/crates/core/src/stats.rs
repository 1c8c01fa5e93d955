//! Small empirical-distribution helpers shared by the test modules and the harness.

/// Sorts a slice of finite values in place.
pub fn sort_floats(values: &mut [f64]) {
    values.sort_unstable_by(f64::total_cmp);
}

/// Order statistic at position ⌈level·len⌉ (1-based) of a sorted slice,
/// clamped to the first and last entry. This is the left-continuous
/// empirical quantile.
pub fn order_statistic(sorted: &[f64], level: f64) -> f64 {
    assert!(!sorted.is_empty(), "order statistic of an empty sample");
    let len = sorted.len();
    let rank = (level * len as f64).ceil() as usize;
    sorted[rank.clamp(1, len) - 1]
}

/// Empirical quantile at `level` of an unsorted sample.
pub fn empirical_quantile(values: &[f64], level: f64) -> f64 {
    let mut v = values.to_vec();
    sort_floats(&mut v);
    order_statistic(&v, level)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Standard error of the sample mean.
pub fn std_error(values: &[f64]) -> f64 {
    (variance(values) / values.len() as f64).sqrt()
}

/// Two-sample Kolmogorov–Smirnov distance sup |F_a − F_b|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    sort_floats(&mut a);
    sort_floats(&mut b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// One-sample Kolmogorov–Smirnov distance against a continuous cdf.
pub fn ks_one_sample<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut v = values.to_vec();
    sort_floats(&mut v);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let c = cdf(x);
        acc.max((i as f64 + 1.0) / n - c).max(c - i as f64 / n)
    })
}
