//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("parse error in {path} at row {row}, column {col}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        message: String,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    // -- dataset --
    #[error("no view files found (expected view_1.csv, view_2.csv, ...)")]
    NoViews,

    #[error("view {view} is empty")]
    EmptyView { view: usize },

    #[error("view {view} has {found} rows but mask has {expected}")]
    ViewRows {
        view: usize,
        expected: usize,
        found: usize,
    },

    #[error("mask entry at row {row}, column {col} must be 0 or 1")]
    MaskValue { row: usize, col: usize },

    #[error("mask has {found} columns but {views} view files were found")]
    MaskColumns { views: usize, found: usize },

    #[error("sample {sample} has no view")]
    NoViewForSample { sample: usize },

    #[error("sample {sample} is present in some but not all views (unsupported pattern)")]
    PartialViews { sample: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("labels file has {found} entries but dataset has {expected} samples")]
    LabelCount { expected: usize, found: usize },

    #[error("label at row {row} is negative")]
    NegativeLabel { row: usize },

    #[error("view index {view} out of range (dataset has {views} views)")]
    ViewOutOfRange { view: usize, views: usize },

    #[error("split metadata is inconsistent with mask: {reason}")]
    MetaMismatch { reason: String },

    #[error("invalid dataset: {reason}")]
    InvalidDataset { reason: String },

    // -- splits --
    #[error("paired ratio {ratio} outside (0, 1]")]
    InvalidPairedRatio { ratio: f64 },

    #[error("paired ratio {ratio} rounds to zero paired samples for n = {n}")]
    EmptyPairedSet { ratio: f64, n: usize },

    #[error("dataset has missing views; split generation needs complete input")]
    NotComplete,

    // -- graph --
    #[error("need at least 2 samples to build a neighbor graph, got {found}")]
    TooFewSamples { found: usize },

    #[error("neighbor count {neighbors} must be positive and below sample count {samples}")]
    NeighborCount { neighbors: usize, samples: usize },

    #[error("adjacency list is not symmetric at pair ({i}, {j})")]
    AsymmetricAdjacency { i: usize, j: usize },

    #[error("adjacency entry {j} out of range for {n} nodes")]
    AdjacencyRange { j: usize, n: usize },

    // -- solver --
    #[error("latent dimension {latent} exceeds feature count {dim} of view {view}")]
    LatentDimTooLarge {
        latent: usize,
        view: usize,
        dim: usize,
    },

    #[error("invalid model parameters: {reason}")]
    InvalidParams { reason: String },

    #[error("zero diagonal at row {row}; graph lacks a self-loop for an isolated sample")]
    ZeroDiagonal { row: usize },

    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: String,
        expected: String,
        found: String,
    },

    // -- clustering --
    #[error("cannot form {clusters} clusters from {samples} samples")]
    TooManyClusters { clusters: usize, samples: usize },

    #[error("invalid k-means parameters: {reason}")]
    InvalidKMeans { reason: String },

    // -- metrics --
    #[error("label slices have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("label slices are empty")]
    EmptyLabels,

    // -- baselines --
    #[error("view {view} has no observed samples; cannot mean-fill")]
    NoObservedRows { view: usize },

    // -- harness --
    #[error("ground-truth labels required but absent")]
    MissingLabels,

    #[error("grid search needs nonempty parameter grids")]
    EmptyGrid,

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
