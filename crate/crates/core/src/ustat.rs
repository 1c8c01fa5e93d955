//! Pairwise-distance machinery.
//!
//! [`DistanceSample`] holds the sorted multiset of all `n(n−1)/2` pairwise
//! distances of a point sample; its [`StepQuantile`] is the left-continuous
//! generalized inverse of the empirical U-distribution function. Trimmed
//! one-dimensional Kantorovich distances between step quantiles are computed
//! exactly by walking the merged breakpoint grid.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{check_beta, Error, Result};
use crate::spaces::PointSample;
use crate::stats::sort_floats;

/// Step quantile function with equal mass `1/len` on every atom.
///
/// On `((i−1)/N, i/N]` it takes the value `values[i−1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepQuantile {
    values: Vec<f64>,
}

impl StepQuantile {
    /// Sorts `values` and wraps them. Values must be finite.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Size("a step quantile needs at least one atom".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("quantile atoms must be finite".into()));
        }
        sort_floats(&mut values);
        Ok(StepQuantile { values })
    }

    pub(crate) fn from_sorted_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        StepQuantile { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of atoms `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let count = self.values.partition_point(|&v| v <= x);
        count as f64 / self.len() as f64
    }

    /// `inf{x : cdf(x) ≥ t}` for `t ∈ (0, 1]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1], got {t}")));
        }
        let n = self.len();
        let nf = n as f64;
        let mut k = ((t * nf).ceil() as usize).clamp(1, n);
        // Align the rank with `cdf`'s own `count / n` rounding.
        while k > 1 && (k - 1) as f64 / nf >= t {
            k -= 1;
        }
        while k < n && (k as f64 / nf) < t {
            k += 1;
        }
        Ok(self.values[k - 1])
    }
}

/// Sorted pairwise distances of a point sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSample {
    quantile: StepQuantile,
    n_points: usize,
}

impl DistanceSample {
    /// Wraps an explicit list of `n_points·(n_points−1)/2` distances.
    pub fn from_distances(distances: Vec<f64>, n_points: usize) -> Result<Self> {
        if n_points < 2 || distances.len() != n_points * (n_points - 1) / 2 {
            return Err(Error::Size(format!(
                "{} distances do not match {n_points} points",
                distances.len()
            )));
        }
        if distances.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::Parameter("distances must be nonnegative".into()));
        }
        Ok(DistanceSample {
            quantile: StepQuantile::new(distances)?,
            n_points,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn distances(&self) -> &[f64] {
        self.quantile.values()
    }

    pub fn len(&self) -> usize {
        self.quantile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quantile.is_empty()
    }

    pub fn quantile(&self) -> &StepQuantile {
        &self.quantile
    }

    pub fn into_quantile(self) -> StepQuantile {
        self.quantile
    }

    /// Writes the distances as a one-column CSV with header `distance`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["distance"])?;
        for d in self.distances() {
            w.write_record([d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// All `n(n−1)/2` distances of `sample`, sorted ascending.
pub fn pairwise(sample: &PointSample) -> Result<DistanceSample> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::Size(format!("pairwise distances need ≥ 2 points, got {n}")));
    }
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let pi = sample.point(i);
        for j in i + 1..n {
            d.push(sample.metric().distance(pi, sample.point(j)));
        }
    }
    sort_floats(&mut d);
    Ok(DistanceSample {
        quantile: StepQuantile::from_sorted_unchecked(d),
        n_points: n,
    })
}

/// Empirical U-distribution function: the fraction of distances `≤ t`.
pub fn u_cdf(d: &DistanceSample, t: f64) -> f64 {
    d.quantile.cdf(t)
}

/// Empirical U-quantile `values[⌈t·N⌉]` for `t ∈ (0, 1]`.
pub fn u_quantile(d: &DistanceSample, t: f64) -> Result<f64> {
    d.quantile.eval(t)
}

/// Partition of all index pairs `(i, j)`, `1 ≤ i < j ≤ n`, into groups of
/// vertex-disjoint pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPartition {
    pub n: usize,
    pub groups: Vec<Vec<(usize, usize)>>,
}

/// Round-robin (circle method) partition of the pairs over `{1, …, n}`.
///
/// Even `n` gives `n − 1` groups of `n/2` pairs; odd `n` gives `n` groups of
/// `(n − 1)/2` pairs, obtained by dropping the phantom player of the
/// `n + 1` construction.
pub fn partition_pairs(n: usize) -> Result<PairPartition> {
    if n < 3 {
        return Err(Error::Size(format!("pair partition needs n ≥ 3, got {n}")));
    }
    let players = if n.is_multiple_of(2) { n } else { n + 1 };
    let rotating = players - 1;
    let mut groups = Vec::with_capacity(rotating);
    for round in 0..rotating {
        let mut group = Vec::with_capacity(players / 2);
        // Player `players` stays fixed and meets `round + 1`.
        let mut push = |a: usize, b: usize| {
            if a <= n && b <= n {
                group.push((a.min(b), a.max(b)));
            }
        };
        push(players, round + 1);
        for k in 1..players / 2 {
            let a = (round + k) % rotating + 1;
            let b = (round + rotating - k) % rotating + 1;
            push(a, b);
        }
        group.sort_unstable();
        groups.push(group);
    }
    Ok(PairPartition { n, groups })
}

/// `∫_β^{1−β} |a(t) − b(t)|^p dt` for step quantiles `a`, `b`, computed
/// exactly on the merged grid `{i/N_a} ∪ {j/N_b} ∪ {β, 1−β}`.
pub fn kantorovich_1d(a: &StepQuantile, b: &StepQuantile, p: f64, beta: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("order p must be a finite value ≥ 1, got {p}")));
    }
    check_beta(beta)?;
    let cost = |x: f64, y: f64| {
        let d = (x - y).abs();
        if p == 2.0 {
            d * d
        } else if p == 1.0 {
            d
        } else {
            d.powf(p)
        }
    };
    let (av, bv) = (a.values(), b.values());
    let (na, nb) = (av.len(), bv.len());
    if na == nb {
        return Ok(equal_length(av, bv, beta, cost));
    }

    let lo = beta;
    let hi = 1.0 - beta;
    let (naf, nbf) = (na as f64, nb as f64);
    // Cell indices containing `lo` from the right.
    let mut i = ((lo * naf).floor() as usize).min(na - 1);
    let mut j = ((lo * nbf).floor() as usize).min(nb - 1);
    let mut t = lo;
    let mut acc = 0.0;
    loop {
        let end_a = (i + 1) as f64 / naf;
        let end_b = (j + 1) as f64 / nbf;
        // Exact comparison of (i+1)/na against (j+1)/nb.
        let order = ((i + 1) as u128 * nb as u128).cmp(&((j + 1) as u128 * na as u128));
        let end = match order {
            Ordering::Greater => end_b,
            _ => end_a,
        };
        if end >= hi {
            acc += (hi - t) * cost(av[i], bv[j]);
            break;
        }
        if end > t {
            acc += (end - t) * cost(av[i], bv[j]);
            t = end;
        }
        match order {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
        if i >= na || j >= nb {
            break;
        }
    }
    Ok(acc)
}

/// Equal-length case: `(1/N)·Σ cost(a_i, b_i)` over full cells plus partial
/// cells at the trim boundaries.
fn equal_length<C: Fn(f64, f64) -> f64>(a: &[f64], b: &[f64], beta: f64, cost: C) -> f64 {
    let n = a.len();
    let nf = n as f64;
    if beta == 0.0 {
        return a.iter().zip(b).map(|(&x, &y)| cost(x, y)).sum::<f64>() / nf;
    }
    let lo = beta * nf;
    let hi = (1.0 - beta) * nf;
    let first_full = lo.ceil() as usize;
    let last_full = (hi.floor() as usize).min(n);
    if first_full > last_full {
        // Both boundaries fall inside one cell.
        let i = (lo.floor() as usize).min(n - 1);
        return (hi - lo) / nf * cost(a[i], b[i]);
    }
    let mut acc: f64 = (first_full..last_full).map(|i| cost(a[i], b[i])).sum();
    if first_full > 0 {
        let i = first_full - 1;
        acc += (first_full as f64 - lo) * cost(a[i], b[i]);
    }
    if last_full < n {
        acc += (hi - last_full as f64) * cost(a[last_full], b[last_full]);
    }
    acc / nf
}
