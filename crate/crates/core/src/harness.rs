//! Power studies, null distributions and protein comparisons.
//!
//! Every replication draws its samples from seeds derived from the plan
//! seed, the position in `n_list` and the replication index, so results do
//! not depend on how replications are scheduled.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{
    dod_test_bootstrap_with, BootstrapConfig, BootstrapSource, CalibrationSample, IndependentSource,
};
use crate::dod::{dod_independent, dod_statistic, independent_distances, DEFAULT_P};
use crate::dtm::{dtm_critical_value, dtm_statistic};
use crate::error::{check_alpha, check_beta, Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::spaces::{load_calpha, sample, PointSample, SpaceSpec};

/// Test used by a power study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Method {
    #[default]
    #[serde(rename = "dod")]
    DoD,
    #[serde(rename = "dod_ind")]
    DoDIndependent,
    #[serde(rename = "dtm")]
    Dtm,
}

fn default_kappa() -> f64 {
    0.1
}

fn default_dtm_reps() -> usize {
    200
}

/// Settings of the DTM competitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtmPlan {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Signature size; `None` means `⌊n/15⌋`.
    #[serde(default)]
    pub n_s: Option<usize>,
    #[serde(default = "default_dtm_reps")]
    pub replications: usize,
}

impl Default for DtmPlan {
    fn default() -> Self {
        DtmPlan {
            kappa: default_kappa(),
            n_s: None,
            replications: default_dtm_reps(),
        }
    }
}

impl DtmPlan {
    pub fn signature_size(&self, n: usize) -> usize {
        self.n_s.unwrap_or((n / 15).max(1))
    }
}

/// A power study: `replications` tests of fresh samples of `space_a`
/// against `space_b` for each `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub space_a: SpaceSpec,
    pub space_b: SpaceSpec,
    pub n_list: Vec<usize>,
    pub beta: f64,
    pub alpha: f64,
    pub replications: usize,
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub method: Method,
    pub seed: u64,
    /// Recompute the critical value from each replication's own sample of
    /// `space_a` instead of once per `n`.
    #[serde(default)]
    pub calibrate_each_replication: bool,
    #[serde(default)]
    pub dtm: DtmPlan,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Parameter("need at least one replication".into()));
        }
        if self.n_list.is_empty() {
            return Err(Error::Parameter("n_list is empty".into()));
        }
        check_beta(self.beta)?;
        check_alpha(self.alpha)?;
        self.bootstrap_config()?;
        self.space_a.validate()?;
        self.space_b.validate()
    }

    /// The bootstrap settings with the plan's trimming level.
    pub fn bootstrap_config(&self) -> Result<BootstrapConfig> {
        let cfg = BootstrapConfig {
            beta: self.beta,
            ..self.bootstrap
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One cell of a power table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub n: usize,
    pub rejection_rate: f64,
    pub replications: usize,
    pub mc_stderr: f64,
}

impl PowerRow {
    pub fn from_rejections(n: usize, rejections: usize, replications: usize) -> Self {
        let rate = rejections as f64 / replications as f64;
        PowerRow {
            n,
            rejection_rate: rate,
            replications,
            mc_stderr: (rate * (1.0 - rate) / replications as f64).sqrt(),
        }
    }
}

// Seed-stream tags below a plan seed.
const CALIBRATION_SAMPLE: u64 = 0;
const CALIBRATION_DRAWS: u64 = 1;
const SAMPLE_A: u64 = 2;
const SAMPLE_B: u64 = 3;

/// A calibrated test for one sample size.
enum Calibrated {
    Fixed(f64),
    PerReplication,
}

pub fn run_power(plan: &ExperimentPlan) -> Result<Vec<PowerRow>> {
    run_power_with(plan, Execution::default())
}

pub fn run_power_with(plan: &ExperimentPlan, exec: Execution) -> Result<Vec<PowerRow>> {
    plan.validate()?;
    let cfg = plan.bootstrap_config()?;
    plan.n_list
        .iter()
        .enumerate()
        .map(|(ni, &n)| {
            let ni = ni as u64;
            let level = 1.0 - plan.alpha;
            let critical_for = |x: &PointSample, stream: u64, inner: Execution| -> Result<f64> {
                let cfg = cfg.with_seed(derive_seed(plan.seed, &[ni, CALIBRATION_DRAWS, stream]));
                match plan.method {
                    Method::DoD => BootstrapSource::new(x)?.quantile(&cfg, level, inner),
                    Method::DoDIndependent => {
                        IndependentSource::new(independent_distances(x)?)?.quantile(&cfg, level, inner)
                    }
                    Method::Dtm => dtm_critical_value(
                        x,
                        plan.dtm.kappa,
                        plan.dtm.signature_size(n),
                        plan.alpha,
                        plan.dtm.replications,
                        cfg.seed,
                        inner,
                    ),
                }
            };
            let calibrated = if plan.calibrate_each_replication {
                Calibrated::PerReplication
            } else {
                let xc = sample(&plan.space_a, n, derive_seed(plan.seed, &[ni, CALIBRATION_SAMPLE]))?;
                Calibrated::Fixed(critical_for(&xc, u64::MAX, exec)?)
            };
            let decisions = exec.try_map(plan.replications, |r| -> Result<bool> {
                let r = r as u64;
                let x = sample(&plan.space_a, n, derive_seed(plan.seed, &[ni, SAMPLE_A, r]))?;
                let y = sample(&plan.space_b, n, derive_seed(plan.seed, &[ni, SAMPLE_B, r]))?;
                let critical = match calibrated {
                    Calibrated::Fixed(c) => c,
                    Calibrated::PerReplication => critical_for(&x, r, Execution::Sequential)?,
                };
                let stat = match plan.method {
                    Method::DoD => dod_statistic(&x, &y, plan.beta, DEFAULT_P)?.scaled,
                    Method::DoDIndependent => dod_independent(&x, &y, plan.beta, DEFAULT_P)?.scaled,
                    Method::Dtm => dtm_statistic(&x, &y, plan.dtm.kappa, plan.dtm.signature_size(n))?,
                };
                Ok(stat > critical)
            })?;
            let rejections = decisions.iter().filter(|&&d| d).count();
            Ok(PowerRow::from_rejections(n, rejections, plan.replications))
        })
        .collect()
}

/// Scaled statistics `n/2·DoD` between independent pairs of samples of `spec`.
pub fn run_null_distribution(
    spec: &SpaceSpec,
    n: usize,
    beta: f64,
    replications: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    run_null_distribution_with(spec, n, beta, replications, seed, Execution::default())
}

pub fn run_null_distribution_with(
    spec: &SpaceSpec,
    n: usize,
    beta: f64,
    replications: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>> {
    check_beta(beta)?;
    if replications == 0 {
        return Err(Error::Parameter("need at least one replication".into()));
    }
    spec.validate()?;
    exec.try_map(replications, |r| {
        let r = r as u64;
        let x = sample(spec, n, derive_seed(seed, &[SAMPLE_A, r]))?;
        let y = sample(spec, n, derive_seed(seed, &[SAMPLE_B, r]))?;
        Ok(dod_statistic(&x, &y, beta, DEFAULT_P)?.scaled)
    })
}

/// Bootstrapped DoD tests between random `n`-subsets of the Cα atoms of two
/// PDB files, calibrated on the subset from `path_a`; one row per `n`.
#[allow(clippy::too_many_arguments)]
pub fn compare_pdb(
    path_a: impl AsRef<Path>,
    path_b: impl AsRef<Path>,
    n_list: &[usize],
    beta: f64,
    alpha: f64,
    cfg: &BootstrapConfig,
    replications: usize,
    seed: u64,
) -> Result<Vec<PowerRow>> {
    compare_pdb_with(path_a, path_b, n_list, beta, alpha, cfg, replications, seed, Execution::default())
}

#[allow(clippy::too_many_arguments)]
pub fn compare_pdb_with(
    path_a: impl AsRef<Path>,
    path_b: impl AsRef<Path>,
    n_list: &[usize],
    beta: f64,
    alpha: f64,
    cfg: &BootstrapConfig,
    replications: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<PowerRow>> {
    check_alpha(alpha)?;
    if replications == 0 {
        return Err(Error::Parameter("need at least one replication".into()));
    }
    let cfg = BootstrapConfig { beta, ..*cfg };
    cfg.validate()?;
    let a = load_calpha(path_a)?;
    let b = load_calpha(path_b)?;
    n_list
        .iter()
        .enumerate()
        .map(|(ni, &n)| {
            let shortest = a.len().min(b.len());
            if n > shortest {
                return Err(Error::Size(format!("cannot draw {n} Cα atoms from a file with {shortest}")));
            }
            let ni = ni as u64;
            let decisions = exec.try_map(replications, |r| -> Result<bool> {
                let r = r as u64;
                let x = a.subsample(n, derive_seed(seed, &[ni, SAMPLE_A, r]))?;
                let y = b.subsample(n, derive_seed(seed, &[ni, SAMPLE_B, r]))?;
                let cfg = cfg.with_seed(derive_seed(seed, &[ni, CALIBRATION_DRAWS, r]));
                let out =
                    dod_test_bootstrap_with(&x, &y, &cfg, alpha, CalibrationSample::FromX, Execution::Sequential)?;
                Ok(out.reject)
            })?;
            let rejections = decisions.iter().filter(|&&d| d).count();
            Ok(PowerRow::from_rejections(n, rejections, replications))
        })
        .collect()
}

/// Writes records as a JSON array.
pub fn write_json<T: Serialize, W: Write>(records: &[T], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, records)?;
    Ok(())
}

/// Writes records as CSV with a header row taken from the field names.
pub fn write_csv<T: Serialize, W: Write>(records: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one named CSV column.
pub fn write_column_csv<W: Write>(name: &str, values: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([name])?;
    for v in values {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
