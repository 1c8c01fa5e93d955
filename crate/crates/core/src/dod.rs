//! The trimmed distribution-of-distances statistic and its test decision.

use serde::{Deserialize, Serialize};

use crate::analytic::quadrature::GaussLegendre;
use crate::error::{check_alpha, check_beta, Error, Result};
use crate::spaces::PointSample;
use crate::ustat::{kantorovich_1d, pairwise, DistanceSample, StepQuantile};

/// Default order of the statistic.
pub const DEFAULT_P: f64 = 2.0;

/// The trimmed statistic together with its scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoDResult {
    /// `∫_β^{1−β} |U_n⁻¹ − V_m⁻¹|^p dt`.
    pub statistic: f64,
    /// `n·m/(n+m) · statistic`.
    pub scaled: f64,
    pub beta: f64,
    pub p: f64,
    /// Size of the first sample (for the independent variant, the number of
    /// distances used).
    pub n: usize,
    pub m: usize,
}

impl DoDResult {
    fn new(statistic: f64, beta: f64, p: f64, n: usize, m: usize) -> Self {
        DoDResult {
            statistic,
            scaled: scale_factor(n, m) * statistic,
            beta,
            p,
            n,
            m,
        }
    }
}

/// `n·m/(n+m)`.
pub fn scale_factor(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    n * m / (n + m)
}

/// Where a critical value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    Bootstrap,
    #[serde(rename = "limit_mc")]
    LimitMC,
}

/// A test decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub scaled_statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub calibration: Calibration,
}

impl TestOutcome {
    /// Rejects iff `scaled_statistic > critical_value`.
    pub fn decide(scaled_statistic: f64, critical_value: f64, alpha: f64, calibration: Calibration) -> Self {
        TestOutcome {
            scaled_statistic,
            critical_value,
            alpha,
            reject: scaled_statistic > critical_value,
            calibration,
        }
    }
}

/// Statistic from precomputed distance samples.
pub fn dod_from_distances(x: &DistanceSample, y: &DistanceSample, beta: f64, p: f64) -> Result<DoDResult> {
    let stat = kantorovich_1d(x.quantile(), y.quantile(), p, beta)?;
    Ok(DoDResult::new(stat, beta, p, x.n_points(), y.n_points()))
}

/// The trimmed DoD statistic of two point samples.
pub fn dod_statistic(x: &PointSample, y: &PointSample, beta: f64, p: f64) -> Result<DoDResult> {
    check_beta(beta)?;
    dod_from_distances(&pairwise(x)?, &pairwise(y)?, beta, p)
}

/// Applies the decision rule with a given critical value and `p = 2`.
pub fn dod_test(
    x: &PointSample,
    y: &PointSample,
    beta: f64,
    alpha: f64,
    critical: f64,
    calibration: Calibration,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    if !(critical >= 0.0) {
        return Err(Error::Parameter(format!("critical value must be ≥ 0, got {critical}")));
    }
    let r = dod_statistic(x, y, beta, DEFAULT_P)?;
    Ok(TestOutcome::decide(r.scaled, critical, alpha, calibration))
}

/// The distances `d(X₁,X₂), d(X₃,X₄), …` of disjoint consecutive pairs.
pub fn independent_distances(x: &PointSample) -> Result<StepQuantile> {
    if x.len() < 2 {
        return Err(Error::Size(format!("need ≥ 2 points, got {}", x.len())));
    }
    let d = (0..x.len() / 2).map(|k| x.distance(2 * k, 2 * k + 1)).collect();
    StepQuantile::new(d)
}

/// DoD statistic restricted to the independent distances. Scaling uses the
/// effective sizes `⌊n/2⌋` and `⌊m/2⌋`.
pub fn dod_independent(x: &PointSample, y: &PointSample, beta: f64, p: f64) -> Result<DoDResult> {
    check_beta(beta)?;
    let a = independent_distances(x)?;
    let b = independent_distances(y)?;
    let stat = kantorovich_1d(&a, &b, p, beta)?;
    Ok(DoDResult::new(stat, beta, p, a.len(), b.len()))
}

/// Quantile, cdf and covariance kernel of one space, as used by
/// [`alternative_variance`].
pub struct SpaceKernels<'a> {
    pub quantile: &'a (dyn Fn(f64) -> f64 + Sync),
    pub cdf: &'a (dyn Fn(f64) -> f64 + Sync),
    /// The two-term covariance `Γ(s, t) = E[F(s|X)F(t|X)] − U(s)U(t)`.
    pub gamma: &'a (dyn Fn(f64, f64) -> f64 + Sync),
}

/// Default number of Gauss–Legendre nodes per axis.
pub const VARIANCE_NODES: usize = 128;

/// Asymptotic variance of `√(nm/(n+m))·(DoD̂ − DoD)` when the distance
/// distributions differ, with `λ = lim n/(n+m)`.
///
/// Evaluates
///
/// ```text
/// 16λ ∬ (x − V⁻¹(U(x)))(y − V⁻¹(U(y))) Γ_X(x,y) dx dy
///   + 16(1−λ) ∬ (U⁻¹(V(x)) − x)(U⁻¹(V(y)) − y) Γ_Y(x,y) dx dy
/// ```
///
/// over `[U⁻¹(β), U⁻¹(1−β)]²` and `[V⁻¹(β), V⁻¹(1−β)]²` by tensorized
/// Gauss–Legendre quadrature.
///
/// When the two trimmed quantile functions agree the limit is degenerate and
/// the result is 0; it is then not a usable normal scale.
pub fn alternative_variance(
    x: &SpaceKernels<'_>,
    y: &SpaceKernels<'_>,
    beta: f64,
    lambda: f64,
    nodes: usize,
) -> Result<f64> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Parameter(format!("trimming level must lie in (0, 1/2), got {beta}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Parameter(format!("λ must lie in (0, 1), got {lambda}")));
    }
    let rule = GaussLegendre::new(nodes.max(1));
    let term = |own: &SpaceKernels<'_>, other: &SpaceKernels<'_>, sign: f64| -> Result<f64> {
        let lo = (own.quantile)(beta);
        let hi = (own.quantile)(1.0 - beta);
        let pts: Vec<(f64, f64, f64)> = rule
            .on(lo, hi)
            .map(|(s, w)| (s, w, sign * (s - (other.quantile)((own.cdf)(s)))))
            .collect();
        let mut acc = 0.0;
        for &(s, ws, hs) in &pts {
            if hs == 0.0 {
                continue;
            }
            for &(t, wt, ht) in &pts {
                if ht == 0.0 {
                    continue;
                }
                let g = (own.gamma)(s, t);
                if !g.is_finite() {
                    return Err(Error::Numeric(format!("kernel value {g} at ({s}, {t})")));
                }
                acc += ws * wt * hs * ht * g;
            }
        }
        if !acc.is_finite() {
            return Err(Error::Numeric("variance integrand is not finite".into()));
        }
        Ok(acc)
    };
    let vx = term(x, y, 1.0)?;
    let vy = term(y, x, -1.0)?;
    Ok((16.0 * lambda * vx + 16.0 * (1.0 - lambda) * vy).max(0.0))
}
