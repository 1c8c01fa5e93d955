//! `dod`: command-line front end for the distribution-of-distances test.
//!
//! Every subcommand writes records either as a JSON array or as CSV with a
//! header row, to stdout or to `--out`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dod_core::analytic::{
    disc_euclid_density, gamma_square, square_supnorm_law, ConditionalCdfKernel,
};
use dod_core::bootstrap::{dod_test_bootstrap, BootstrapConfig, CalibrationSample, DEFAULT_REPLICATIONS};
use dod_core::dod::{dod_independent, dod_statistic};
use dod_core::dtm::{dtm_statistic, dtm_test};
use dod_core::harness::{
    compare_pdb, run_null_distribution, run_power, write_column_csv, write_csv, write_json, DtmPlan,
    ExperimentPlan, Method,
};
use dod_core::limit::{build_limit_grid, sample_xi, DEFAULT_GRID_SIZE, DEFAULT_JITTER};
use dod_core::spaces::{sample, Metric, SpaceSpec};

#[derive(Parser)]
#[command(name = "dod", version, about = "Distribution-of-distances two-sample testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum MethodArg {
    #[default]
    Dod,
    DodInd,
    Dtm,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dod => Method::DoD,
            MethodArg::DodInd => Method::DoDIndependent,
            MethodArg::Dtm => Method::Dtm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum LawArg {
    /// Unit square, sup-norm (closed-form kernel).
    #[default]
    Square,
    /// Disc of diameter one, Euclidean (Monte Carlo kernel).
    Disc,
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

impl Output {
    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn records<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        let mut w = self.writer()?;
        match self.format {
            Format::Json => {
                write_json(rows, &mut w)?;
                writeln!(w)?;
            }
            Format::Csv => write_csv(rows, &mut w)?,
        }
        w.flush()?;
        Ok(())
    }

    fn column(&self, name: &str, values: &[f64]) -> Result<()> {
        let mut w = self.writer()?;
        match self.format {
            Format::Json => {
                let rows: Vec<serde_json::Value> =
                    values.iter().map(|v| serde_json::json!({ name: v })).collect();
                write_json(&rows, &mut w)?;
                writeln!(w)?;
            }
            Format::Csv => write_column_csv(name, values, &mut w)?,
        }
        w.flush()?;
        Ok(())
    }
}

/// A space given as a JSON `SpaceSpec`.
fn parse_space(s: &str) -> Result<SpaceSpec, String> {
    SpaceSpec::from_json(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct Pair {
    /// First space, as JSON, e.g. `{"family":"unit_square","metric":"euclidean"}`.
    #[arg(long, value_parser = parse_space)]
    space_a: SpaceSpec,
    /// Second space, as JSON.
    #[arg(long, value_parser = parse_space)]
    space_b: SpaceSpec,
}

#[derive(Args)]
struct Calib {
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap resample size; defaults to the sample size.
    #[arg(long)]
    n_b: Option<usize>,
    /// Bootstrap replications R.
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    bootstrap_reps: usize,
}

impl Calib {
    fn config(&self, seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            n_b: self.n_b,
            replications: self.bootstrap_reps,
            beta: self.beta,
            seed,
            allow_untrimmed: self.beta == 0.0,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw points from a space.
    Sample {
        #[arg(long, value_parser = parse_space)]
        space_a: SpaceSpec,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Compute the trimmed statistic between samples of two spaces.
    Dod {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        n: usize,
        /// Size of the second sample; defaults to `n`.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_enum, default_value_t)]
        method: MethodArg,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// One bootstrapped test between samples of two spaces.
    Test {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        calib: Calib,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Power study: rejection rates over repeated tests.
    Power {
        /// JSON experiment plan; other plan flags are ignored when given.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, value_parser = parse_space)]
        space_a: Option<SpaceSpec>,
        #[arg(long, value_parser = parse_space)]
        space_b: Option<SpaceSpec>,
        /// Sample sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[command(flatten)]
        calib: Calib,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, value_enum, default_value_t)]
        method: MethodArg,
        #[arg(long, default_value_t = 0.1)]
        kappa: f64,
        #[arg(long)]
        n_s: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Scaled null statistics between independent samples of one space.
    NullDist {
        #[arg(long, value_parser = parse_space)]
        space_a: SpaceSpec,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Draws of the Gaussian-process limit of the scaled null statistic.
    LimitSample {
        #[arg(long, value_enum, default_value_t)]
        law: LawArg,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
        grid: usize,
        /// Anchor and partner counts of the Monte Carlo kernel (disc law).
        #[arg(long, default_value_t = 1000)]
        kernel_draws: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// One distance-to-measure test between samples of two spaces.
    DtmTest {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        kappa: f64,
        /// Signature size; defaults to n/15.
        #[arg(long)]
        n_s: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
        bootstrap_reps: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Repeated bootstrapped tests between Cα subsets of two PDB files.
    PdbCompare {
        #[arg(long)]
        pdb_a: PathBuf,
        #[arg(long)]
        pdb_b: PathBuf,
        /// Subset sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[command(flatten)]
        calib: Calib,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Serialize)]
struct StatRecord {
    method: &'static str,
    statistic: f64,
    scaled: f64,
    beta: f64,
    p: f64,
    n: usize,
    m: usize,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sample { space_a, n, seed, output } => {
            let x = sample(&space_a, n, seed)?;
            match output.format {
                Format::Json => {
                    let pts: Vec<&[f64]> = x.points().collect();
                    output.records(&pts)
                }
                Format::Csv => {
                    let mut w = output.writer()?;
                    let names = ["x", "y", "z"];
                    writeln!(w, "{}", names[..x.dim().min(3)].join(","))?;
                    for p in x.points() {
                        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                        writeln!(w, "{}", row.join(","))?;
                    }
                    w.flush()?;
                    Ok(())
                }
            }
        }
        Command::Dod { pair, n, m, beta, p, method, seed, output } => {
            let x = sample(&pair.space_a, n, seed)?;
            let y = sample(&pair.space_b, m.unwrap_or(n), seed.wrapping_add(1))?;
            let rec = match method {
                MethodArg::Dod => {
                    let r = dod_statistic(&x, &y, beta, p)?;
                    StatRecord { method: "dod", statistic: r.statistic, scaled: r.scaled, beta, p, n: r.n, m: r.m }
                }
                MethodArg::DodInd => {
                    let r = dod_independent(&x, &y, beta, p)?;
                    StatRecord { method: "dod_ind", statistic: r.statistic, scaled: r.scaled, beta, p, n: r.n, m: r.m }
                }
                MethodArg::Dtm => {
                    let n_s = (n / 15).max(1);
                    let t = dtm_statistic(&x, &y, 0.1, n_s)?;
                    StatRecord { method: "dtm", statistic: t, scaled: t, beta: 0.0, p: 1.0, n, m: y.len() }
                }
            };
            output.records(&[rec])
        }
        Command::Test { pair, n, calib, seed, output } => {
            let x = sample(&pair.space_a, n, seed)?;
            let y = sample(&pair.space_b, n, seed.wrapping_add(1))?;
            let cfg = calib.config(seed.wrapping_add(2));
            let out = dod_test_bootstrap(&x, &y, &cfg, calib.alpha, CalibrationSample::FromX)?;
            output.records(&[out])
        }
        Command::Power { plan, space_a, space_b, n, calib, reps, method, kappa, n_s, seed, output } => {
            let plan = match plan {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<ExperimentPlan>(&text).context("parsing experiment plan")?
                }
                None => {
                    let (Some(space_a), Some(space_b), Some(seed)) = (space_a, space_b, seed) else {
                        bail!("--space-a, --space-b and --seed are required without --plan");
                    };
                    if n.is_empty() {
                        bail!("--n is required without --plan");
                    }
                    ExperimentPlan {
                        name: "cli".into(),
                        space_a,
                        space_b,
                        n_list: n,
                        beta: calib.beta,
                        alpha: calib.alpha,
                        replications: reps,
                        bootstrap: calib.config(seed),
                        method: method.into(),
                        seed,
                        calibrate_each_replication: false,
                        dtm: DtmPlan { kappa, n_s, replications: calib.bootstrap_reps },
                    }
                }
            };
            output.records(&run_power(&plan)?)
        }
        Command::NullDist { space_a, n, beta, reps, seed, output } => {
            output.column("statistic", &run_null_distribution(&space_a, n, beta, reps, seed)?)
        }
        Command::LimitSample { law, beta, reps, grid, kernel_draws, seed, output } => {
            let draws = match law {
                LawArg::Square => {
                    let g = build_limit_grid(&square_supnorm_law(), &gamma_square, beta, grid, DEFAULT_JITTER)?;
                    sample_xi(&g, reps, seed)?
                }
                LawArg::Disc => {
                    let spec = SpaceSpec::disc(0.5, Metric::Euclidean);
                    let k = ConditionalCdfKernel::estimate(&spec, kernel_draws, kernel_draws, seed)?;
                    let gamma = |s: f64, t: f64| k.gamma(s, t);
                    let g = build_limit_grid(&disc_euclid_density(), &gamma, beta, grid, DEFAULT_JITTER)?;
                    sample_xi(&g, reps, seed.wrapping_add(1))?
                }
            };
            output.column("xi", &draws)
        }
        Command::DtmTest { pair, n, kappa, n_s, alpha, bootstrap_reps, seed, output } => {
            let x = sample(&pair.space_a, n, seed)?;
            let y = sample(&pair.space_b, n, seed.wrapping_add(1))?;
            let n_s = n_s.unwrap_or((n / 15).max(1));
            let out = dtm_test(&x, &y, kappa, n_s, alpha, bootstrap_reps, seed.wrapping_add(2))?;
            output.records(&[out])
        }
        Command::PdbCompare { pdb_a, pdb_b, n, calib, reps, seed, output } => {
            let cfg = calib.config(seed);
            let rows = compare_pdb(&pdb_a, &pdb_b, &n, calib.beta, calib.alpha, &cfg, reps, seed)?;
            output.records(&rows)
        }
    }
}
