//! Distribution-of-distances two-sample testing for metric measure spaces.
//!
//! Two point clouds are compared through the laws of their pairwise
//! distances: the test statistic is the trimmed `L^p` distance between the
//! two empirical distance-quantile functions, a lower bound for the
//! Gromov-Kantorovich distance between the underlying spaces that is
//! invariant under isometries. Critical values come either from an
//! `n`-out-of-`n` bootstrap or from a simulated Gaussian-process limit.
//!
//! Module map:
//!
//! * [`spaces`]: samplers for the reference spaces and the PDB reader.
//! * [`ustat`]: pairwise distances, step quantiles, exact 1-D transport.
//! * [`dod`]: the statistic, its decision rule and the alternative variance.
//! * [`analytic`]: closed-form distance laws, covariance kernels, `J₂`.
//! * [`limit`]: Gaussian-process limit simulation.
//! * [`bootstrap`]: resampling calibration.
//! * [`dtm`]: distance-to-measure baseline.
//! * [`harness`]: power studies and their output formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bootstrap;
pub mod dod;
pub mod dtm;
mod error;
pub mod exec;
pub mod harness;
pub mod limit;
pub mod spaces;
pub mod stats;
pub mod ustat;

pub use error::{Error, Result};
pub use exec::Execution;
