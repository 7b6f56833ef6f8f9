//! Incomplete multi-view clustering via graph-regularized matrix
//! factorization.
//!
//! Multi-view data assigns each sample several feature representations
//! (views); in the incomplete setting some samples are observed in only one
//! view. This crate learns a shared low-dimensional representation for all
//! samples by alternating minimization of a graph-weighted factorization
//! objective: per-view reconstruction errors are gated by a binary
//! nearest-neighbor graph, paired samples are tied to a consensus block, and
//! an l1 penalty keeps representations sparse. The learned representation is
//! clustered with k-means and scored with accuracy, NMI, and purity.
//!
//! The crate also ships the split protocol used for benchmarking (random
//! paired/unpaired partitions at a given paired ratio), the mean-fill
//! baselines `bsv` and `concat`, and an experiment harness with grid search
//! over the two penalty weights. A CLI binary exposes all of it; see the
//! repository README.

pub mod baselines;
pub mod clustering;
mod csvio;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod solver;
pub mod synthetic;

pub use error::{Error, Result};
