//! Distance-to-measure baseline test.
//!
//! `δ(x)` is the mean distance from `x` to its `k = round(κn)` nearest
//! sample points. The signature of a sample is the uniform law of `δ` at
//! its first `n_S` points, and two samples are compared by the
//! 1-Kantorovich distance between their signatures.
//!
//! The critical value is an approximation: the statistic is recomputed
//! between two independently drawn random `n_S`-subsets of the calibration
//! sample, which mimics the null spread of two signatures but is not the
//! resampling scheme of any particular published DTM test.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dod::{Calibration, TestOutcome};
use crate::error::{check_alpha, Error, Result};
use crate::exec::{derive_seed, rng_from, Execution};
use crate::spaces::PointSample;
use crate::stats::{order_statistic, sort_floats};
use crate::ustat::{kantorovich_1d, StepQuantile};

/// Fewest calibration replications accepted by [`dtm_test`].
pub const MIN_REPLICATIONS: usize = 20;

/// Whether an evaluation point that belongs to the sample counts as its
/// own nearest neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfNeighbor {
    #[default]
    Include,
    Exclude,
}

/// Uniform law of `δ` values at the first `n_S` sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DTMSignature {
    pub values: Vec<f64>,
    pub kappa: f64,
    pub n_s: usize,
}

impl DTMSignature {
    fn quantile(&self) -> Result<StepQuantile> {
        StepQuantile::new(self.values.clone())
    }
}

/// Number of neighbours `round(κn)`.
pub fn neighbor_count(n: usize, kappa: f64) -> Result<usize> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::Parameter(format!("κ must lie in (0, 1], got {kappa}")));
    }
    let kn = kappa * n as f64;
    if kn < 1.0 - 1e-9 {
        return Err(Error::Parameter(format!("κ·n = {kn} < 1 leaves no neighbours")));
    }
    Ok((kn.round() as usize).clamp(1, n))
}

fn mean_smallest(d: &mut [f64], k: usize) -> f64 {
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, f64::total_cmp);
    }
    d[..k].iter().sum::<f64>() / k as f64
}

/// `δ_{X,κ}(x)`.
pub fn dtm_function(x: &PointSample, kappa: f64, point: &[f64]) -> Result<f64> {
    if point.len() != x.dim() {
        return Err(Error::Size(format!(
            "point has dimension {}, sample has {}",
            point.len(),
            x.dim()
        )));
    }
    let k = neighbor_count(x.len(), kappa)?;
    let metric = x.metric();
    let mut d: Vec<f64> = x.points().map(|y| metric.distance(point, y)).collect();
    Ok(mean_smallest(&mut d, k))
}

/// `δ` at sample point `i`, optionally leaving the point itself out.
fn dtm_at_index(x: &PointSample, k: usize, i: usize, mode: SelfNeighbor) -> f64 {
    let mut d: Vec<f64> = (0..x.len())
        .filter(|&j| mode == SelfNeighbor::Include || j != i)
        .map(|j| x.distance(i, j))
        .collect();
    let k = k.min(d.len());
    mean_smallest(&mut d, k)
}

pub fn dtm_signature(x: &PointSample, kappa: f64, n_s: usize) -> Result<DTMSignature> {
    dtm_signature_with(x, kappa, n_s, SelfNeighbor::Include)
}

pub fn dtm_signature_with(x: &PointSample, kappa: f64, n_s: usize, mode: SelfNeighbor) -> Result<DTMSignature> {
    check_size(x, n_s, mode)?;
    let k = neighbor_count(x.len(), kappa)?;
    Ok(DTMSignature {
        values: (0..n_s).map(|i| dtm_at_index(x, k, i, mode)).collect(),
        kappa,
        n_s,
    })
}

fn check_size(x: &PointSample, n_s: usize, mode: SelfNeighbor) -> Result<()> {
    if n_s == 0 || n_s > x.len() {
        return Err(Error::Size(format!(
            "signature size must lie in [1, {}], got {n_s}",
            x.len()
        )));
    }
    if mode == SelfNeighbor::Exclude && x.len() < 2 {
        return Err(Error::Size("excluding self needs ≥ 2 points".into()));
    }
    Ok(())
}

/// `K₁` between two signatures.
pub fn signature_distance(a: &DTMSignature, b: &DTMSignature) -> Result<f64> {
    kantorovich_1d(&a.quantile()?, &b.quantile()?, 1.0, 0.0)
}

/// `T_{n_S,κ}(X, Y)`.
pub fn dtm_statistic(x: &PointSample, y: &PointSample, kappa: f64, n_s: usize) -> Result<f64> {
    signature_distance(&dtm_signature(x, kappa, n_s)?, &dtm_signature(y, kappa, n_s)?)
}

/// Empirical `(1 − α)`-quantile of `R` subset-pair statistics drawn from `x`.
pub fn dtm_critical_value(
    x: &PointSample,
    kappa: f64,
    n_s: usize,
    alpha: f64,
    replications: usize,
    seed: u64,
    exec: Execution,
) -> Result<f64> {
    check_alpha(alpha)?;
    if replications < MIN_REPLICATIONS {
        return Err(Error::Parameter(format!(
            "DTM calibration needs ≥ {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }
    check_size(x, n_s, SelfNeighbor::Include)?;
    let k = neighbor_count(x.len(), kappa)?;
    let n = x.len();
    let delta: Vec<f64> = (0..n).map(|i| dtm_at_index(x, k, i, SelfNeighbor::Include)).collect();
    let mut stats = exec.try_map(replications, |r| {
        let mut rng = rng_from(derive_seed(seed, &[r as u64]));
        let pick = |rng: &mut _| {
            let idx = index::sample(rng, n, n_s);
            StepQuantile::new(idx.iter().map(|i| delta[i]).collect())
        };
        let a = pick(&mut rng)?;
        let b = pick(&mut rng)?;
        kantorovich_1d(&a, &b, 1.0, 0.0)
    })?;
    sort_floats(&mut stats);
    Ok(order_statistic(&stats, 1.0 - alpha))
}

/// DTM test with the critical value calibrated on `x`.
pub fn dtm_test(
    x: &PointSample,
    y: &PointSample,
    kappa: f64,
    n_s: usize,
    alpha: f64,
    replications: usize,
    seed: u64,
) -> Result<TestOutcome> {
    dtm_test_with(x, y, kappa, n_s, alpha, replications, seed, Execution::default())
}

#[allow(clippy::too_many_arguments)]
pub fn dtm_test_with(
    x: &PointSample,
    y: &PointSample,
    kappa: f64,
    n_s: usize,
    alpha: f64,
    replications: usize,
    seed: u64,
    exec: Execution,
) -> Result<TestOutcome> {
    let critical = dtm_critical_value(x, kappa, n_s, alpha, replications, seed, exec)?;
    let stat = dtm_statistic(x, y, kappa, n_s)?;
    Ok(TestOutcome::decide(stat, critical, alpha, Calibration::Bootstrap))
}
