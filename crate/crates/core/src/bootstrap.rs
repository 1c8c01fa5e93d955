//! Resampling calibration of the DoD test.
//!
//! `n_B` points are drawn with replacement from one sample, the U-quantile
//! of the resample is compared with that of the full sample, and
//! `Ξ* = n_B·∫_β^{1−β} ((U*)⁻¹ − U_n⁻¹)² dt` is recorded. The empirical
//! quantile of `R` such values is the critical value. Pairs that pick the
//! same original point twice contribute distance zero, as they do for any
//! multiset of points.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dod::{dod_statistic, Calibration, TestOutcome, DEFAULT_P};
use crate::error::{check_alpha, Error, Result};
use crate::exec::{derive_seed, rng_from, Execution};
use crate::spaces::PointSample;
use crate::stats::{order_statistic, sort_floats};
use crate::ustat::{kantorovich_1d, StepQuantile};

/// Default number of bootstrap replications.
pub const DEFAULT_REPLICATIONS: usize = 200;

/// Parameters of the bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Resample size; `None` means the size of the calibration sample.
    #[serde(default)]
    pub n_b: Option<usize>,
    pub replications: usize,
    pub beta: f64,
    pub seed: u64,
    /// Permits `beta = 0`, for which consistency is not established.
    #[serde(default)]
    pub allow_untrimmed: bool,
}

impl BootstrapConfig {
    pub fn new(replications: usize, beta: f64, seed: u64) -> Result<Self> {
        let cfg = BootstrapConfig {
            n_b: None,
            replications,
            beta,
            seed,
            allow_untrimmed: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration with `beta = 0`.
    pub fn untrimmed(replications: usize, seed: u64) -> Result<Self> {
        let cfg = BootstrapConfig {
            n_b: None,
            replications,
            beta: 0.0,
            seed,
            allow_untrimmed: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_n_b(mut self, n_b: usize) -> Result<Self> {
        self.n_b = Some(n_b);
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Parameter("need at least one bootstrap replication".into()));
        }
        if let Some(n_b) = self.n_b {
            if n_b < 2 {
                return Err(Error::Parameter(format!("resample size must be ≥ 2, got {n_b}")));
            }
        }
        let trimmed = self.beta > 0.0 && self.beta < 0.5;
        let untrimmed = self.beta == 0.0 && self.allow_untrimmed;
        if !(trimmed || untrimmed) {
            return Err(Error::Parameter(format!(
                "bootstrap trimming level must lie in (0, 1/2), got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Resample size for a calibration sample of `n` points.
    pub fn resample_size(&self, n: usize) -> usize {
        self.n_b.unwrap_or(n)
    }
}

/// `⌊n^0.9⌋`, a resample size satisfying `√n_B = o(n)`.
pub fn theory_n_b(n: usize) -> usize {
    ((n as f64).powf(0.9).floor() as usize).max(2)
}

/// Which sample supplies the bootstrap critical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSample {
    #[default]
    FromX,
    FromY,
}

/// A calibration sample with its distance matrix and U-quantile cached.
#[derive(Debug, Clone)]
pub struct BootstrapSource {
    n: usize,
    matrix: Vec<f64>,
    quantile: StepQuantile,
}

impl BootstrapSource {
    pub fn new(x: &PointSample) -> Result<Self> {
        let n = x.len();
        if n < 3 {
            return Err(Error::Size(format!("bootstrap needs ≥ 3 points, got {n}")));
        }
        let mut matrix = vec![0.0; n * n];
        let mut upper = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let d = x.distance(i, j);
                matrix[i * n + j] = d;
                matrix[j * n + i] = d;
                upper.push(d);
            }
        }
        Ok(BootstrapSource {
            n,
            matrix,
            quantile: StepQuantile::new(upper)?,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `Ξ*` for the resample given by `indices` (with repetitions allowed).
    pub fn xi_star_from_indices(&self, indices: &[usize], beta: f64) -> Result<f64> {
        let m = indices.len();
        if m < 2 {
            return Err(Error::Size(format!("resample needs ≥ 2 points, got {m}")));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::Size(format!("index {bad} out of range for {} points", self.n)));
        }
        let mut d = Vec::with_capacity(m * (m - 1) / 2);
        for (a, &i) in indices.iter().enumerate() {
            let row = &self.matrix[i * self.n..(i + 1) * self.n];
            d.extend(indices[a + 1..].iter().map(|&j| row[j]));
        }
        sort_floats(&mut d);
        let star = StepQuantile::from_sorted_unchecked(d);
        Ok(m as f64 * kantorovich_1d(&star, &self.quantile, 2.0, beta)?)
    }

    /// The resample indices of replication `rep`.
    pub fn resample_indices(&self, cfg: &BootstrapConfig, rep: usize) -> Vec<usize> {
        let mut rng = rng_from(derive_seed(cfg.seed, &[rep as u64]));
        (0..cfg.resample_size(self.n)).map(|_| rng.random_range(0..self.n)).collect()
    }

    pub fn xi_star(&self, cfg: &BootstrapConfig, rep: usize) -> Result<f64> {
        self.xi_star_from_indices(&self.resample_indices(cfg, rep), cfg.beta)
    }

    /// All `R` draws, sorted.
    pub fn draws(&self, cfg: &BootstrapConfig, exec: Execution) -> Result<Vec<f64>> {
        cfg.validate()?;
        let mut v = exec.try_map(cfg.replications, |r| self.xi_star(cfg, r))?;
        sort_floats(&mut v);
        Ok(v)
    }

    /// Order statistic at rank `⌈level·R⌉` of the draws.
    pub fn quantile(&self, cfg: &BootstrapConfig, level: f64, exec: Execution) -> Result<f64> {
        check_alpha(level)?;
        Ok(order_statistic(&self.draws(cfg, exec)?, level))
    }
}

/// One bootstrap value `Ξ*` for replication `rep_index`.
pub fn xi_star(x: &PointSample, cfg: &BootstrapConfig, rep_index: usize) -> Result<f64> {
    cfg.validate()?;
    BootstrapSource::new(x)?.xi_star(cfg, rep_index)
}

/// `Ξ*` for an explicit resample of `x`.
pub fn xi_star_from_indices(x: &PointSample, indices: &[usize], beta: f64) -> Result<f64> {
    BootstrapSource::new(x)?.xi_star_from_indices(indices, beta)
}

/// Empirical `level`-quantile of `R` bootstrap values.
pub fn bootstrap_quantile(x: &PointSample, cfg: &BootstrapConfig, level: f64) -> Result<f64> {
    BootstrapSource::new(x)?.quantile(cfg, level, Execution::default())
}

/// The bootstrapped DoD test: critical value from the designated sample at
/// level `1 − α`, statistic `nm/(n+m)·DoD` with `p = 2`.
pub fn dod_test_bootstrap(
    x: &PointSample,
    y: &PointSample,
    cfg: &BootstrapConfig,
    alpha: f64,
    calibration: CalibrationSample,
) -> Result<TestOutcome> {
    dod_test_bootstrap_with(x, y, cfg, alpha, calibration, Execution::default())
}

pub fn dod_test_bootstrap_with(
    x: &PointSample,
    y: &PointSample,
    cfg: &BootstrapConfig,
    alpha: f64,
    calibration: CalibrationSample,
    exec: Execution,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    cfg.validate()?;
    let source = match calibration {
        CalibrationSample::FromX => BootstrapSource::new(x)?,
        CalibrationSample::FromY => BootstrapSource::new(y)?,
    };
    let critical = source.quantile(cfg, 1.0 - alpha, exec)?;
    let stat = dod_statistic(x, y, cfg.beta, DEFAULT_P)?;
    Ok(TestOutcome::decide(stat.scaled, critical, alpha, Calibration::Bootstrap))
}

/// Bootstrap for the statistic built on the `⌊n/2⌋` disjoint-pair
/// distances, which are i.i.d.: `Ξ*_ind = N·∫_β^{1−β} (F*⁻¹ − F_N⁻¹)² dt`
/// with `F*` the empirical law of `N` values drawn with replacement.
#[derive(Debug, Clone)]
pub struct IndependentSource {
    values: Vec<f64>,
    quantile: StepQuantile,
}

impl IndependentSource {
    pub fn new(distances: StepQuantile) -> Result<Self> {
        if distances.len() < 2 {
            return Err(Error::Size(format!("need ≥ 2 distances, got {}", distances.len())));
        }
        Ok(IndependentSource {
            values: distances.values().to_vec(),
            quantile: distances,
        })
    }

    pub fn xi_star(&self, cfg: &BootstrapConfig, rep: usize) -> Result<f64> {
        let n = self.values.len();
        let mut rng = rng_from(derive_seed(cfg.seed, &[rep as u64]));
        let mut d: Vec<f64> = (0..n).map(|_| self.values[rng.random_range(0..n)]).collect();
        sort_floats(&mut d);
        let star = StepQuantile::from_sorted_unchecked(d);
        Ok(n as f64 * kantorovich_1d(&star, &self.quantile, 2.0, cfg.beta)?)
    }

    pub fn quantile(&self, cfg: &BootstrapConfig, level: f64, exec: Execution) -> Result<f64> {
        check_alpha(level)?;
        cfg.validate()?;
        let mut v = exec.try_map(cfg.replications, |r| self.xi_star(cfg, r))?;
        sort_floats(&mut v);
        Ok(order_statistic(&v, level))
    }
}
