//! Closed-form distance laws and the functionals built on them.
//!
//! Covers the three reference spaces with known distance densities (unit
//! square under the sup-norm, the unit-diameter disc, and the union of two
//! squares), the covariance kernel `Γ` of the U-quantile process both in
//! closed form for the square and by nested Monte Carlo for any
//! [`SpaceSpec`], the `J₂` functional, and a grid check of the quantile
//! derivative envelope used for the untrimmed limit theory.

pub mod quadrature;

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::derive_seed;
use crate::spaces::{sample, SpaceSpec};
use crate::stats::sort_floats;
use quadrature::{adaptive, GaussLegendre};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A distance law with density, cdf and quantile function.
#[derive(Clone)]
pub struct ClosedFormLaw {
    name: String,
    density: RealFn,
    cdf: RealFn,
    quantile: RealFn,
    /// Disjoint closed intervals whose union carries all mass.
    support: Vec<(f64, f64)>,
}

impl std::fmt::Debug for ClosedFormLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosedFormLaw")
            .field("name", &self.name)
            .field("support", &self.support)
            .finish()
    }
}

impl ClosedFormLaw {
    pub fn new(
        name: impl Into<String>,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        quantile: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: Vec<(f64, f64)>,
    ) -> Self {
        ClosedFormLaw {
            name: name.into(),
            density: Arc::new(density),
            cdf: Arc::new(cdf),
            quantile: Arc::new(quantile),
            support,
        }
    }

    /// Law given only by a density; the cdf is obtained by adaptive
    /// quadrature and the quantile by bisection.
    pub fn from_density(
        name: impl Into<String>,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: Vec<(f64, f64)>,
    ) -> Self {
        let density: RealFn = Arc::new(density);
        let pieces = support.clone();
        let dens = density.clone();
        let cdf: RealFn = Arc::new(move |x: f64| integrate_density(&*dens, &pieces, x));
        let lo = support.first().map(|s| s.0).unwrap_or(0.0);
        let hi = support.last().map(|s| s.1).unwrap_or(1.0);
        let c = cdf.clone();
        let quantile: RealFn = Arc::new(move |t: f64| bisect_quantile(&*c, t, lo, hi));
        ClosedFormLaw {
            name: name.into(),
            density,
            cdf,
            quantile,
            support,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn density(&self, x: f64) -> f64 {
        (self.density)(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (self.cdf)(x)
    }

    /// Generalized inverse `inf{x : U(x) ≥ t}` for `t ∈ (0, 1)`.
    pub fn quantile(&self, t: f64) -> f64 {
        (self.quantile)(t)
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    /// `(U⁻¹)′(t) = 1/u(U⁻¹(t))`; infinite where the density vanishes.
    pub fn quantile_derivative(&self, t: f64) -> f64 {
        let u = self.density(self.quantile(t));
        if u > 0.0 {
            1.0 / u
        } else {
            f64::INFINITY
        }
    }
}

/// Absolute tolerance of the quantile bisection.
pub const BISECTION_TOL: f64 = 1e-12;
const QUANTILE_SLACK: f64 = 1e-14;

fn integrate_density(density: &dyn Fn(f64) -> f64, pieces: &[(f64, f64)], x: f64) -> f64 {
    let mut acc = 0.0;
    for &(a, b) in pieces {
        if x <= a {
            break;
        }
        let (v, _) = adaptive(density, a, x.min(b), 1e-14);
        acc += v;
    }
    acc.clamp(0.0, 1.0)
}

fn bisect_quantile(cdf: &dyn Fn(f64) -> f64, t: f64, mut lo: f64, mut hi: f64) -> f64 {
    // Invariant: cdf(lo) < t ≤ cdf(hi), so the answer lies in (lo, hi]. The
    // slack keeps quadrature noise on flat stretches from moving the answer
    // to the far end of the flat part.
    let target = t - QUANTILE_SLACK * t;
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Distance law of the uniform unit square under the sup-norm:
/// `u₁(s) = 4s³ − 12s² + 8s`, `U₁(t) = (2t − t²)²`,
/// `U₁⁻¹(t) = 1 − √(1 − √t)` on `[0, 1]`.
pub fn square_supnorm_law() -> ClosedFormLaw {
    ClosedFormLaw::new(
        "square_supnorm",
        |s| {
            if (0.0..=1.0).contains(&s) {
                4.0 * s * s * s - 12.0 * s * s + 8.0 * s
            } else {
                0.0
            }
        },
        square_cdf,
        |t| 1.0 - (1.0 - t.clamp(0.0, 1.0).sqrt()).sqrt(),
        vec![(0.0, 1.0)],
    )
}

/// `U₁(t) = (2t − t²)²` clamped to `[0, 1]`.
pub fn square_cdf(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let a = 2.0 * t - t * t;
    a * a
}

/// Euclidean distance law of the uniform disc of diameter one:
/// `u₂(s) = 8s(2/π·arccos s − 2s/π·√(1 − s²))` on `[0, 1]`.
pub fn disc_euclid_density() -> ClosedFormLaw {
    ClosedFormLaw::from_density("disc_euclid", disc_density, vec![(0.0, 1.0)])
}

fn disc_density(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    (8.0 * s * (2.0 / PI * s.acos() - 2.0 * s / PI * (1.0 - s * s).sqrt())).max(0.0)
}

/// Sup-norm distance law of `[0,1]² ∪ ([5,6] × [0,1])`: half the mass on
/// `[0, 1]` with density `2s³ − 6s² + 4s`, the other half triangular on
/// `[4, 6]`.
pub fn union_squares_density() -> ClosedFormLaw {
    ClosedFormLaw::from_density(
        "union_squares",
        |s| {
            if (0.0..=1.0).contains(&s) {
                2.0 * s * s * s - 6.0 * s * s + 4.0 * s
            } else if (4.0..5.0).contains(&s) {
                0.5 * s - 2.0
            } else if (5.0..=6.0).contains(&s) {
                3.0 - 0.5 * s
            } else {
                0.0
            }
        },
        vec![(0.0, 1.0), (4.0, 6.0)],
    )
}

/// Uniform law on `[a, b]`.
pub fn uniform_law(a: f64, b: f64) -> ClosedFormLaw {
    let w = b - a;
    ClosedFormLaw::new(
        "uniform",
        move |x| if (a..=b).contains(&x) { 1.0 / w } else { 0.0 },
        move |x| ((x - a) / w).clamp(0.0, 1.0),
        move |t| a + w * t,
        vec![(a, b)],
    )
}

/// `Γ₁(t, t′) = E[F(t|X)·F(t′|X)]` for the sup-norm unit square, where
/// `F(t|x) = P(‖x − X′‖∞ ≤ t)`.
pub fn gamma1_square(t: f64, t_prime: f64) -> Result<f64> {
    for v in [t, t_prime] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("Γ₁ is defined on [0,1]², got {v}")));
        }
    }
    let (t, s) = if t >= t_prime { (t, t_prime) } else { (t_prime, t) };
    let small = -s * s * s / 3.0 - s * s * t - 2.0 * s * t * t + 4.0 * s * t;
    let large = -(s - t) * (s - t) - s * t * t + s + t * t * t / 3.0 + t - 1.0 / 3.0;
    let h = if t < 0.5 || s <= 1.0 - t { small } else { large };
    Ok(h * h)
}

/// Full covariance kernel `Γ(t, t′) = Γ₁(t, t′) − U₁(t)U₁(t′)` of the
/// sup-norm unit square; arguments are clamped to `[0, 1]`.
pub fn gamma_square(t: f64, t_prime: f64) -> f64 {
    let (t, t_prime) = (t.clamp(0.0, 1.0), t_prime.clamp(0.0, 1.0));
    gamma1_square(t, t_prime).expect("clamped arguments") - square_cdf(t) * square_cdf(t_prime)
}

/// Nested Monte Carlo estimate of the covariance kernel of a space.
///
/// Each of the `n_outer` anchor points `X_k` gets its own `n_inner` fresh
/// partners; the sorted anchor-to-partner distances give the conditional
/// cdf `F(t|X_k)`. Products use the unbiased within-row form
/// `(C_s·C_t − C_{min(s,t)}) / (n(n−1))`.
#[derive(Debug, Clone)]
pub struct ConditionalCdfKernel {
    rows: Vec<Vec<f64>>,
}

impl ConditionalCdfKernel {
    pub fn estimate(spec: &SpaceSpec, n_outer: usize, n_inner: usize, seed: u64) -> Result<Self> {
        if n_outer < 100 || n_inner < 100 {
            return Err(Error::Parameter(format!(
                "kernel estimation needs ≥ 100 outer and inner draws, got {n_outer} × {n_inner}"
            )));
        }
        let anchors = sample(spec, n_outer, derive_seed(seed, &[0]))?;
        let metric = spec.metric;
        let rows = (0..n_outer)
            .map(|k| {
                let partners = sample(spec, n_inner, derive_seed(seed, &[1, k as u64]))?;
                let x = anchors.point(k);
                let mut d: Vec<f64> = partners.points().map(|y| metric.distance(x, y)).collect();
                sort_floats(&mut d);
                Ok(d)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConditionalCdfKernel { rows })
    }

    fn count(row: &[f64], t: f64) -> f64 {
        row.partition_point(|&d| d <= t) as f64
    }

    /// Estimate of `Γ(s, t)` and its Monte Carlo standard error.
    pub fn gamma_with_stderr(&self, s: f64, t: f64) -> (f64, f64) {
        let k = self.rows.len() as f64;
        let m = self.rows[0].len() as f64;
        let mut prods = Vec::with_capacity(self.rows.len());
        let mut fs = Vec::with_capacity(self.rows.len());
        let mut ft = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let cs = Self::count(row, s);
            let ct = Self::count(row, t);
            let cmin = Self::count(row, s.min(t));
            prods.push((cs * ct - cmin) / (m * (m - 1.0)));
            fs.push(cs / m);
            ft.push(ct / m);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / k;
        let (mp, ms, mt) = (mean(&prods), mean(&fs), mean(&ft));
        let gamma = mp - ms * mt;
        // Linearized influence of each anchor on the estimate.
        let infl: Vec<f64> = (0..prods.len())
            .map(|i| prods[i] - mt * fs[i] - ms * ft[i])
            .collect();
        let mi = mean(&infl);
        let var = infl.iter().map(|v| (v - mi) * (v - mi)).sum::<f64>() / (k - 1.0);
        (gamma, (var / k).sqrt())
    }

    pub fn gamma(&self, s: f64, t: f64) -> f64 {
        self.gamma_with_stderr(s, t).0
    }

    /// Estimate of the cdf `U(t)` pooled over all anchor rows.
    pub fn cdf(&self, t: f64) -> f64 {
        let m = self.rows[0].len() as f64;
        self.rows.iter().map(|r| Self::count(r, t) / m).sum::<f64>() / self.rows.len() as f64
    }
}

/// Monte Carlo estimate of `Γ(t, t′) = E[F(t|X)F(t′|X)] − U(t)U(t′)`.
pub fn gamma_kernel_mc(
    spec: &SpaceSpec,
    t: f64,
    t_prime: f64,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<f64> {
    Ok(ConditionalCdfKernel::estimate(spec, n_outer, n_inner, seed)?.gamma(t, t_prime))
}

/// Number of geometric refinement levels toward each endpoint.
const J2_LEVELS: usize = 36;

fn j2_estimate(law: &ClosedFormLaw, levels: usize, rule: &GaussLegendre) -> f64 {
    // ∫ U(1−U)/u dt = ∫₀¹ s(1−s)·((U⁻¹)′(s))² ds
    let integrand = |s: f64| {
        let w = s * (1.0 - s);
        if w == 0.0 {
            return 0.0;
        }
        let d = law.quantile_derivative(s);
        w * d * d
    };
    let mut acc = 0.0;
    let mut panel = |a: f64, b: f64| acc += rule.integrate(a, b, integrand);
    let half = 0.5f64;
    for k in 0..levels {
        let hi = half.powi(k as i32 + 1);
        let lo = hi * 0.5;
        panel(lo, hi);
        panel(1.0 - hi, 1.0 - lo);
    }
    let tail = half.powi(levels as i32 + 1);
    panel(0.0, tail);
    panel(1.0 - tail, 1.0);
    acc
}

/// Largest value accepted as a converged `J₂`.
pub const J2_CAP: f64 = 1e12;

/// `J₂(μ) = ∫ U(1 − U)/u dt`, integrated in the quantile domain on
/// geometrically refined end panels.
///
/// Errors with [`Error::Divergence`] when the law has a gap in its support
/// (the integrand is infinite across the gap) or when refinement does not
/// settle.
pub fn j2_functional(law: &ClosedFormLaw) -> Result<f64> {
    if law.support().len() > 1 {
        return Err(Error::Divergence(format!(
            "{} has disconnected support; U(1−U)/u is infinite on the gap",
            law.name()
        )));
    }
    let coarse = j2_estimate(law, J2_LEVELS - 16, &GaussLegendre::new(16));
    let fine = j2_estimate(law, J2_LEVELS, &GaussLegendre::new(32));
    let tol = 1e-7 * fine.abs().max(1.0);
    if !fine.is_finite() || fine > J2_CAP || (fine - coarse).abs() > tol {
        return Err(Error::Divergence(format!(
            "J₂ of {} did not converge: {coarse} vs {fine}",
            law.name()
        )));
    }
    Ok(fine)
}

/// Envelope `|(U⁻¹)′(t)| ≤ c·t^γ₁·(1 − t)^γ₂` on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionParams {
    pub c_u: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl ConditionParams {
    pub fn new(c_u: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(c_u > 0.0) || !(gamma1 > -1.0) || !(gamma2 > -1.0) {
            return Err(Error::Parameter(format!(
                "need c_U > 0 and γ₁, γ₂ > −1, got ({c_u}, {gamma1}, {gamma2})"
            )));
        }
        Ok(ConditionParams { c_u, gamma1, gamma2 })
    }

    pub fn envelope(&self, t: f64) -> f64 {
        self.c_u * t.powf(self.gamma1) * (1.0 - t).powf(self.gamma2)
    }
}

/// Checks the quantile-derivative envelope at `t_k = k/(grid + 1)`.
///
/// A law with disconnected support fails outright: its quantile function
/// jumps, so `(U⁻¹)′` is unbounded near the jump whatever `c_U`.
pub fn check_condition24(law: &ClosedFormLaw, params: ConditionParams, grid: usize) -> Result<bool> {
    if grid < 100 {
        return Err(Error::Parameter(format!("check grid needs ≥ 100 points, got {grid}")));
    }
    if law.support().len() > 1 {
        return Ok(false);
    }
    let g = grid as f64 + 1.0;
    Ok((1..=grid).all(|k| {
        let t = k as f64 / g;
        law.quantile_derivative(t).abs() <= params.envelope(t)
    }))
}
