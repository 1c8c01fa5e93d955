//! Simulation of the null limit `Ξ = ∫_β^{1−β} G(t)² dt`.
//!
//! `G` is the centred Gaussian process with covariance
//! `4·Γ(U⁻¹(t), U⁻¹(t′)) / (u(U⁻¹(t))·u(U⁻¹(t′)))`. It is discretized on a
//! midpoint grid of `[β, 1−β]`, factorized once by pivoted Cholesky, and Ξ
//! is approximated by the midpoint rule applied to squared sample paths.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};

use crate::analytic::ClosedFormLaw;
use crate::error::{check_alpha, check_beta, Error, Result};
use crate::exec::{derive_seed, rng_from, Execution};
use crate::stats::{order_statistic, sort_floats};

/// Default number of grid cells.
pub const DEFAULT_GRID_SIZE: usize = 512;
/// Default starting jitter, relative to the largest covariance diagonal.
pub const DEFAULT_JITTER: f64 = 1e-10;
/// Largest relative jitter tried before giving up.
pub const MAX_JITTER: f64 = 1e-7;
/// Default number of Ξ draws for critical values.
pub const DEFAULT_DRAWS: usize = 10_000;
/// Smallest admissible grid.
pub const MIN_GRID_SIZE: usize = 16;

/// Discretized covariance of `G` with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct LimitGrid {
    grid: Vec<f64>,
    covariance: Vec<f64>,
    /// Row-major `K × K`; lower-triangular in pivot order.
    factor: Vec<f64>,
    perm: Vec<usize>,
    beta: f64,
    jitter: f64,
}

impl LimitGrid {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Absolute jitter that was added to the diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn cell_width(&self) -> f64 {
        (1.0 - 2.0 * self.beta) / self.len() as f64
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.len() + j]
    }

    /// `F[i][j]` of a factor with `F·Fᵀ = covariance + jitter·I`, in the
    /// original grid order.
    pub fn factor(&self, i: usize, j: usize) -> f64 {
        let k = self.len();
        let pos = self.perm.iter().position(|&p| p == i).expect("permutation");
        self.factor[pos * k + j]
    }

    /// Largest entrywise deviation of `F·Fᵀ` from the covariance.
    pub fn reconstruction_error(&self) -> f64 {
        let k = self.len();
        let mut worst = 0.0f64;
        for a in 0..k {
            for b in 0..=a {
                let s: f64 = (0..=b).map(|c| self.factor[a * k + c] * self.factor[b * k + c]).sum();
                let (i, j) = (self.perm[a], self.perm[b]);
                worst = worst.max((s - self.covariance[i * k + j]).abs());
            }
        }
        worst
    }

    /// `∫ Var G(t) dt` on the grid, i.e. `E[Ξ]` of the discretized law.
    pub fn trace_integral(&self) -> f64 {
        let k = self.len();
        (0..k).map(|i| self.covariance[i * k + i]).sum::<f64>() * self.cell_width()
    }

    /// The grid of the process `c·G`.
    pub fn scaled(&self, c: f64) -> LimitGrid {
        let mut out = self.clone();
        out.covariance.iter_mut().for_each(|v| *v *= c * c);
        out.factor.iter_mut().for_each(|v| *v *= c);
        out.jitter *= c * c;
        out
    }

    /// One Ξ value from the standard normal vector `z`.
    pub fn xi_from_normals(&self, z: &[f64]) -> f64 {
        let k = self.len();
        let mut acc = 0.0;
        for (a, row) in self.factor.chunks_exact(k).enumerate() {
            let g: f64 = row[..=a].iter().zip(z).map(|(l, z)| l * z).sum();
            acc += g * g;
        }
        acc * self.cell_width()
    }
}

/// Midpoint grid `t_i = β + (i + ½)(1 − 2β)/K`.
pub fn midpoint_grid(beta: f64, k: usize) -> Vec<f64> {
    let w = (1.0 - 2.0 * beta) / k as f64;
    (0..k).map(|i| beta + (i as f64 + 0.5) * w).collect()
}

/// Builds the discretized covariance and factorizes it.
///
/// `jitter` is relative to the largest diagonal entry and is escalated by
/// factors of ten up to [`MAX_JITTER`].
pub fn build_limit_grid(
    law: &ClosedFormLaw,
    gamma: &(dyn Fn(f64, f64) -> f64 + Sync),
    beta: f64,
    k: usize,
    jitter: f64,
) -> Result<LimitGrid> {
    check_beta(beta)?;
    if k < MIN_GRID_SIZE {
        return Err(Error::Parameter(format!("grid needs ≥ {MIN_GRID_SIZE} cells, got {k}")));
    }
    if !(jitter > 0.0) || jitter > MAX_JITTER {
        return Err(Error::Parameter(format!("starting jitter must lie in (0, {MAX_JITTER}], got {jitter}")));
    }
    let grid = midpoint_grid(beta, k);
    let quantiles: Vec<f64> = grid.iter().map(|&t| law.quantile(t)).collect();
    let scale = quantiles
        .iter()
        .zip(&grid)
        .map(|(&q, &t)| {
            let u = law.density(q);
            if u > 0.0 && u.is_finite() {
                Ok(2.0 / u)
            } else {
                Err(Error::Domain(format!(
                    "density of {} is {u} at the quantile of t = {t}",
                    law.name()
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = Execution::default().map(k, |i| {
        (0..=i)
            .map(|j| scale[i] * scale[j] * gamma(quantiles[i], quantiles[j]))
            .collect::<Vec<f64>>()
    });
    let mut covariance = vec![0.0; k * k];
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Numeric(format!("covariance entry ({i}, {j}) is {v}")));
            }
            covariance[i * k + j] = v;
            covariance[j * k + i] = v;
        }
    }

    let max_diag = (0..k).map(|i| covariance[i * k + i].abs()).fold(0.0f64, f64::max);
    if covariance.iter().all(|&v| v == 0.0) {
        return Ok(LimitGrid {
            grid,
            covariance,
            factor: vec![0.0; k * k],
            perm: (0..k).collect(),
            beta,
            jitter: 0.0,
        });
    }
    let mut rel = jitter;
    loop {
        let abs = rel * max_diag;
        if let Some((factor, perm)) = pivoted_cholesky(&covariance, k, abs) {
            return Ok(LimitGrid {
                grid,
                covariance,
                factor,
                perm,
                beta,
                jitter: abs,
            });
        }
        rel *= 10.0;
        if max_diag == 0.0 || rel > MAX_JITTER * (1.0 + 1e-9) {
            return Err(Error::Numeric(format!(
                "covariance is not positive semidefinite up to jitter {MAX_JITTER}·max diagonal"
            )));
        }
    }
}

/// Pivoted Cholesky of `a + jitter·I`. Returns the factor rows in pivot
/// order together with the pivot permutation, or `None` when a pivot is
/// not positive.
fn pivoted_cholesky(a: &[f64], k: usize, jitter: f64) -> Option<(Vec<f64>, Vec<usize>)> {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut diag: Vec<f64> = (0..k).map(|i| a[i * k + i] + jitter).collect();
    let mut l = vec![0.0; k * k];
    for c in 0..k {
        let (best, _) = (c..k)
            .map(|r| (r, diag[perm[r]]))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("nonempty");
        perm.swap(c, best);
        // Keep already-computed factor rows aligned with the permutation.
        for col in 0..c {
            l.swap(c * k + col, best * k + col);
        }
        let piv = diag[perm[c]];
        if !(piv > 0.0) {
            return None;
        }
        let lcc = piv.sqrt();
        l[c * k + c] = lcc;
        let pc = perm[c];
        for r in c + 1..k {
            let pr = perm[r];
            let dot: f64 = (0..c).map(|col| l[r * k + col] * l[c * k + col]).sum();
            let v = (a[pr * k + pc] - dot) / lcc;
            l[r * k + c] = v;
            diag[pr] -= v * v;
        }
    }
    Some((l, perm))
}

/// `n_draws` independent Ξ values; draw `i` uses the stream `derive_seed(seed, [i])`.
pub fn sample_xi(grid: &LimitGrid, n_draws: usize, seed: u64) -> Result<Vec<f64>> {
    sample_xi_with(grid, n_draws, seed, Execution::default())
}

pub fn sample_xi_with(grid: &LimitGrid, n_draws: usize, seed: u64, exec: Execution) -> Result<Vec<f64>> {
    if n_draws == 0 {
        return Err(Error::Parameter("need at least one Ξ draw".into()));
    }
    let k = grid.len();
    Ok(exec.map(n_draws, |i| {
        let mut rng = rng_from(derive_seed(seed, &[i as u64]));
        let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        grid.xi_from_normals(&z)
    }))
}

/// Empirical `(1 − α)`-quantile of `n_draws` Ξ values.
pub fn limit_critical_value(grid: &LimitGrid, alpha: f64, n_draws: usize, seed: u64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut draws = sample_xi(grid, n_draws, seed)?;
    sort_floats(&mut draws);
    Ok(order_statistic(&draws, 1.0 - alpha))
}

/// Writes Ξ draws as a single CSV column with header `xi`.
pub fn write_xi_csv<W: Write>(draws: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["xi"])?;
    for d in draws {
        w.write_record([d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
