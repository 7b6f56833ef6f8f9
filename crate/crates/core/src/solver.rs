//! Alternating minimization of the graph-weighted factorization objective.
//!
//! For views `X^(k)` with neighbor graphs `W^(k)`, the model minimizes
//!
//! ```text
//!   Σ_k Σ_{i,j} W^(k)[i,j] ‖x_i^(k) − p_j^(k) U^(k)‖²
//! + λ1 Σ_k ‖G^(k) P^(k) − P^c‖_F²
//! + λ2 Σ_k ‖P^(k)‖₁            subject to U^(k) U^(k)ᵀ = I
//! ```
//!
//! over per-view bases `U^(k)` (rows orthonormal), per-view representations
//! `P^(k)`, and the consensus block `P^c` shared by paired samples. Each
//! sweep solves three convex subproblems in closed form — an orthogonal
//! Procrustes rotation for `U`, a row-wise soft-threshold for `P`, and the
//! paired-block average for `P^c` — so the objective never increases.

use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::dataset::{index_matrix, IndexMatrix, MultiViewDataset};
use crate::error::{Error, Result};
use crate::graph::{default_neighbor_count, knn_graph, NeighborGraph};
use crate::linalg;

/// Neighbor count for graph construction: a fixed value or the
/// samples-per-cluster heuristic of [`default_neighbor_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborSpec {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for NeighborSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            Ok(NeighborSpec::Auto)
        } else {
            s.parse::<usize>()
                .map(NeighborSpec::Fixed)
                .map_err(|_| Error::InvalidConfig {
                    reason: format!("neighbors must be \"auto\" or a positive integer, got {s:?}"),
                })
        }
    }
}

impl std::fmt::Display for NeighborSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NeighborSpec::Auto => write!(f, "auto"),
            NeighborSpec::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl Serialize for NeighborSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NeighborSpec::Auto => serializer.serialize_str("auto"),
            NeighborSpec::Fixed(k) => serializer.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for NeighborSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(k) => Ok(NeighborSpec::Fixed(k as usize)),
            Raw::Str(s) if s == "auto" => Ok(NeighborSpec::Auto),
            Raw::Str(s) => s
                .parse::<usize>()
                .map(NeighborSpec::Fixed)
                .map_err(|_| serde::de::Error::custom(format!("bad neighbor spec {s:?}"))),
        }
    }
}

/// Solver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Consensus penalty weight λ1.
    pub lambda1: f64,
    /// Sparsity penalty weight λ2.
    pub lambda2: f64,
    /// Latent dimension K; must not exceed any view's feature count.
    pub latent_dim: usize,
    pub neighbors: NeighborSpec,
    pub max_iter: usize,
    /// Relative objective-change stopping threshold.
    pub tol: f64,
    pub seed: u64,
}

impl ModelParams {
    /// Defaults: λ1 = 10 and λ2 = 1e-3 (log-scale midpoints of the usual
    /// search ranges [1, 100] and [1e-5, 1e-1]), auto neighbor count,
    /// 200 iterations, tol 1e-6.
    pub fn new(latent_dim: usize) -> Self {
        ModelParams {
            lambda1: 10.0,
            lambda2: 1e-3,
            latent_dim,
            neighbors: NeighborSpec::Auto,
            max_iter: 200,
            tol: 1e-6,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::InvalidParams {
                reason: "latent_dim must be at least 1".into(),
            });
        }
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return Err(Error::InvalidParams {
                reason: format!("lambda1 must be finite and non-negative, got {}", self.lambda1),
            });
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return Err(Error::InvalidParams {
                reason: format!("lambda2 must be finite and non-negative, got {}", self.lambda2),
            });
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams {
                reason: format!("tol must be positive, got {}", self.tol),
            });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParams {
                reason: "max_iter must be at least 1".into(),
            });
        }
        if let NeighborSpec::Fixed(0) = self.neighbors {
            return Err(Error::InvalidParams {
                reason: "neighbor count must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// One evaluation of the objective, with the three addends kept separate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub total: f64,
    pub reconstruction: f64,
    pub consensus: f64,
    pub l1: f64,
}

impl ObjectiveTerms {
    pub fn new(reconstruction: f64, consensus: f64, l1: f64) -> Self {
        ObjectiveTerms {
            total: reconstruction + consensus + l1,
            reconstruction,
            consensus,
            l1,
        }
    }
}

/// Solver state: per-view bases and representations, the consensus block,
/// and the objective trace (entry 0 is the freshly initialized state).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    /// `U^(k)`: K x m_k, rows orthonormal.
    pub bases: Vec<Array2<f64>>,
    /// `P^(k)`: (n_c + n_k) x K.
    pub representations: Vec<Array2<f64>>,
    /// `P^c`: n_c x K.
    pub consensus: Array2<f64>,
    pub trace: Vec<ObjectiveTerms>,
}

impl ModelState {
    /// Completed sweeps (trace entries beyond the initial evaluation).
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.trace.last().map(|t| t.total)
    }
}

/// Shrinkage operator: `sign(x) * max(|x| - t, 0)`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// The neighbor count `fit` will use for this dataset.
pub fn resolved_neighbor_count(dataset: &MultiViewDataset, params: &ModelParams) -> usize {
    match params.neighbors {
        NeighborSpec::Fixed(k) => k,
        // the latent dimension doubles as the target cluster count
        NeighborSpec::Auto => default_neighbor_count(dataset.n_samples(), params.latent_dim),
    }
}

/// Build the per-view kNN graphs `fit` uses.
pub fn build_graphs(dataset: &MultiViewDataset, params: &ModelParams) -> Result<Vec<NeighborGraph>> {
    let count = resolved_neighbor_count(dataset, params);
    dataset
        .views()
        .iter()
        .map(|view| knn_graph(view.view(), count))
        .collect()
}

fn check_dims(dataset: &MultiViewDataset, params: &ModelParams) -> Result<()> {
    for k in 0..dataset.n_views() {
        if params.latent_dim > dataset.view_dim(k) {
            return Err(Error::LatentDimTooLarge {
                latent: params.latent_dim,
                view: k,
                dim: dataset.view_dim(k),
            });
        }
    }
    Ok(())
}

/// Random initial state: `P^(k)` entries i.i.d. uniform on [0, 1),
/// `U^(k)` a row-orthonormalized random matrix (so the orthogonality
/// constraint holds from iteration 0), `P^c` the mean of the paired blocks.
pub fn init_state(dataset: &MultiViewDataset, params: &ModelParams) -> Result<ModelState> {
    params.validate()?;
    check_dims(dataset, params)?;
    let k_dim = params.latent_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut representations = Vec::with_capacity(dataset.n_views());
    let mut bases = Vec::with_capacity(dataset.n_views());
    for view in dataset.views() {
        let rows = view.nrows();
        let p = Array2::from_shape_fn((rows, k_dim), |_| rng.gen::<f64>());
        let raw = Array2::from_shape_fn((k_dim, view.ncols()), |_| rng.gen::<f64>());
        bases.push(linalg::orthonormalize_rows(raw.view())?);
        representations.push(p);
    }

    let blocks: Vec<ArrayView2<'_, f64>> = representations
        .iter()
        .map(|p| p.slice(s![..dataset.paired_count(), ..]))
        .collect();
    let consensus = update_consensus(&blocks)?;

    Ok(ModelState {
        bases,
        representations,
        consensus,
        trace: Vec::new(),
    })
}

/// Basis update: maximize `tr(Xᵀ W P U)` over row-orthonormal `U` via the
/// SVD of `S = Xᵀ W P`.
pub fn update_basis(
    x: ArrayView2<'_, f64>,
    graph: &NeighborGraph,
    p: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    if graph.len() != x.nrows() || p.nrows() != x.nrows() {
        return Err(Error::ShapeMismatch {
            what: "basis update".into(),
            expected: format!("{} rows", x.nrows()),
            found: format!("graph {}, representation {}", graph.len(), p.nrows()),
        });
    }
    let wp = graph.matmul(p);
    let s = x.t().dot(&wp);
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "basis update cross matrix".into(),
        });
    }
    linalg::procrustes_rows(s.view())
}

/// Representation update: with `A = U Xᵀ W + λ1 P^cᵀ G` and the diagonal
/// `M = D + λ1 Gᵀ G`, each row solves
/// `min_p M_ii ‖p − Aᵀ_i / M_ii‖² + λ2 ‖p‖₁`, whose closed form is the
/// soft-threshold `Θ_{λ2 / (2 M_ii)}(Aᵀ_i / M_ii)`.
pub fn update_representation(
    x: ArrayView2<'_, f64>,
    graph: &NeighborGraph,
    index: &IndexMatrix,
    consensus: ArrayView2<'_, f64>,
    u: ArrayView2<'_, f64>,
    lambda1: f64,
    lambda2: f64,
) -> Result<Array2<f64>> {
    let n = x.nrows();
    if graph.len() != n || index.total() != n {
        return Err(Error::ShapeMismatch {
            what: "representation update".into(),
            expected: format!("{n} rows"),
            found: format!("graph {}, selector {}", graph.len(), index.total()),
        });
    }
    if consensus.nrows() != index.paired() || consensus.ncols() != u.nrows() {
        return Err(Error::ShapeMismatch {
            what: "representation update consensus".into(),
            expected: format!("{} x {}", index.paired(), u.nrows()),
            found: format!("{} x {}", consensus.nrows(), consensus.ncols()),
        });
    }
    if u.ncols() != x.ncols() {
        return Err(Error::ShapeMismatch {
            what: "representation update basis".into(),
            expected: format!("{} columns", x.ncols()),
            found: format!("{} columns", u.ncols()),
        });
    }

    // Aᵀ = W X Uᵀ + λ1 Gᵀ P^c
    let mut a_t = graph.matmul(x.dot(&u.t()).view());
    for i in 0..index.paired() {
        let mut row = a_t.row_mut(i);
        row.scaled_add(lambda1, &consensus.row(i));
    }

    for i in 0..n {
        let m_ii = graph.degree(i) + if i < index.paired() { lambda1 } else { 0.0 };
        if m_ii <= 0.0 {
            return Err(Error::ZeroDiagonal { row: i });
        }
        let threshold = lambda2 / (2.0 * m_ii);
        for v in a_t.row_mut(i).iter_mut() {
            *v = soft_threshold(*v / m_ii, threshold);
        }
    }
    Ok(a_t)
}

/// Consensus update: the arithmetic mean of the paired blocks
/// `G^(k) P^(k)`, the stationary point of the consensus penalty.
pub fn update_consensus(paired_blocks: &[ArrayView2<'_, f64>]) -> Result<Array2<f64>> {
    let first = paired_blocks.first().ok_or_else(|| Error::ShapeMismatch {
        what: "consensus update".into(),
        expected: "at least one paired block".into(),
        found: "none".into(),
    })?;
    let shape = (first.nrows(), first.ncols());
    let mut acc = Array2::zeros(shape);
    for block in paired_blocks {
        if (block.nrows(), block.ncols()) != shape {
            return Err(Error::ShapeMismatch {
                what: "consensus update".into(),
                expected: format!("{} x {}", shape.0, shape.1),
                found: format!("{} x {}", block.nrows(), block.ncols()),
            });
        }
        acc += block;
    }
    acc /= paired_blocks.len() as f64;
    Ok(acc)
}

fn check_state(
    dataset: &MultiViewDataset,
    graphs: &[NeighborGraph],
    state: &ModelState,
) -> Result<()> {
    if graphs.len() != dataset.n_views()
        || state.bases.len() != dataset.n_views()
        || state.representations.len() != dataset.n_views()
    {
        return Err(Error::ShapeMismatch {
            what: "objective".into(),
            expected: format!("{} views", dataset.n_views()),
            found: format!(
                "graphs {}, bases {}, representations {}",
                graphs.len(),
                state.bases.len(),
                state.representations.len()
            ),
        });
    }
    for k in 0..dataset.n_views() {
        if graphs[k].len() != dataset.view(k).nrows() {
            return Err(Error::ShapeMismatch {
                what: format!("graph of view {k}"),
                expected: format!("{} nodes", dataset.view(k).nrows()),
                found: format!("{} nodes", graphs[k].len()),
            });
        }
    }
    Ok(())
}

/// Objective evaluated from its definition: the graph-gated pairwise
/// reconstruction errors plus the consensus and l1 penalties. `fit` records
/// the same quantity through the algebraically equivalent trace form; see
/// [`working_objective`].
pub fn objective(
    dataset: &MultiViewDataset,
    graphs: &[NeighborGraph],
    state: &ModelState,
    params: &ModelParams,
) -> Result<ObjectiveTerms> {
    check_state(dataset, graphs, state)?;
    let mut reconstruction = 0.0;
    let mut consensus = 0.0;
    let mut l1 = 0.0;
    for k in 0..dataset.n_views() {
        let x = dataset.view(k);
        let p = &state.representations[k];
        let y = p.dot(&state.bases[k]); // reconstructed rows P U
        for i in 0..x.nrows() {
            let xi = x.row(i);
            for &j in graphs[k].neighbors(i) {
                let yj = y.row(j);
                reconstruction += xi
                    .iter()
                    .zip(yj.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            }
        }
        let paired = p.slice(s![..dataset.paired_count(), ..]);
        consensus += paired
            .iter()
            .zip(state.consensus.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        l1 += p.iter().map(|v| v.abs()).sum::<f64>();
    }
    Ok(ObjectiveTerms::new(
        reconstruction,
        params.lambda1 * consensus,
        params.lambda2 * l1,
    ))
}

/// The working form of the objective with the data-dependent constant
/// `Σ_k tr(Xᵀ D X)` dropped:
/// `λ1 Σ‖GP − P^c‖² + λ2 Σ‖P‖₁ + Σ_k (tr(Pᵀ D P) − 2 tr(Xᵀ W P U))`.
/// Equals [`objective`] minus [`reconstruction_constant`] whenever the bases
/// have orthonormal rows.
pub fn working_objective(
    dataset: &MultiViewDataset,
    graphs: &[NeighborGraph],
    state: &ModelState,
    params: &ModelParams,
) -> Result<f64> {
    check_state(dataset, graphs, state)?;
    let mut acc = 0.0;
    for k in 0..dataset.n_views() {
        let x = dataset.view(k);
        let p = &state.representations[k];
        let u = &state.bases[k];
        let mut tr_pdp = 0.0;
        for (i, row) in p.rows().into_iter().enumerate() {
            tr_pdp += graphs[k].degree(i) * row.dot(&row);
        }
        // tr(Xᵀ W P U) = <W X Uᵀ, P>
        let wxu = graphs[k].matmul(x.dot(&u.t()).view());
        let cross: f64 = wxu.iter().zip(p.iter()).map(|(a, b)| a * b).sum();
        acc += tr_pdp - 2.0 * cross;

        let paired = p.slice(s![..dataset.paired_count(), ..]);
        let cons: f64 = paired
            .iter()
            .zip(state.consensus.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        acc += params.lambda1 * cons + params.lambda2 * p.iter().map(|v| v.abs()).sum::<f64>();
    }
    Ok(acc)
}

/// The constant the working objective drops: `Σ_k tr(Xᵀ D X)`.
pub fn reconstruction_constant(dataset: &MultiViewDataset, graphs: &[NeighborGraph]) -> f64 {
    let mut acc = 0.0;
    for (view, graph) in dataset.views().iter().zip(graphs) {
        for (i, row) in view.rows().into_iter().enumerate() {
            acc += graph.degree(i) * row.dot(&row);
        }
    }
    acc
}

/// Exact trace-form evaluation valid for any `U` (orthonormal or not):
/// reconstruction as `tr(XᵀDX) + tr((PU)ᵀ D (PU)) − 2 tr(Xᵀ W P U)` with the
/// cached products `wx = W X` and `xdx = tr(Xᵀ D X)`.
fn objective_terms_cached(
    dataset: &MultiViewDataset,
    graphs: &[NeighborGraph],
    wx: &[Array2<f64>],
    xdx: &[f64],
    state: &ModelState,
    params: &ModelParams,
) -> ObjectiveTerms {
    let mut reconstruction = 0.0;
    let mut consensus = 0.0;
    let mut l1 = 0.0;
    for k in 0..dataset.n_views() {
        let p = &state.representations[k];
        let y = p.dot(&state.bases[k]);
        let mut tr_ydy = 0.0;
        for (i, row) in y.rows().into_iter().enumerate() {
            tr_ydy += graphs[k].degree(i) * row.dot(&row);
        }
        let cross: f64 = wx[k].iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        reconstruction += xdx[k] + tr_ydy - 2.0 * cross;

        let paired = p.slice(s![..dataset.paired_count(), ..]);
        consensus += paired
            .iter()
            .zip(state.consensus.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        l1 += p.iter().map(|v| v.abs()).sum::<f64>();
    }
    ObjectiveTerms::new(
        reconstruction,
        params.lambda1 * consensus,
        params.lambda2 * l1,
    )
}

/// Fit the model: build graphs, initialize from the seed, then sweep
/// (basis, representation) per view followed by the consensus update until
/// the relative objective change drops below `tol` or `max_iter` sweeps.
pub fn fit(dataset: &MultiViewDataset, params: &ModelParams) -> Result<ModelState> {
    params.validate()?;
    check_dims(dataset, params)?;
    let graphs = build_graphs(dataset, params)?;
    fit_with_graphs(dataset, &graphs, params)
}

/// [`fit`] with caller-provided graphs (they must include self-loops for
/// the row updates to stay well-posed).
pub fn fit_with_graphs(
    dataset: &MultiViewDataset,
    graphs: &[NeighborGraph],
    params: &ModelParams,
) -> Result<ModelState> {
    params.validate()?;
    check_dims(dataset, params)?;
    let mut state = init_state(dataset, params)?;
    check_state(dataset, graphs, &state)?;

    let indexes: Vec<IndexMatrix> = (0..dataset.n_views())
        .map(|k| index_matrix(dataset, k))
        .collect::<Result<_>>()?;
    let wx: Vec<Array2<f64>> = dataset
        .views()
        .iter()
        .zip(graphs)
        .map(|(x, g)| g.matmul(x.view()))
        .collect();
    let xdx: Vec<f64> = dataset
        .views()
        .iter()
        .zip(graphs)
        .map(|(x, g)| {
            x.rows()
                .into_iter()
                .enumerate()
                .map(|(i, row)| g.degree(i) * row.dot(&row))
                .sum()
        })
        .collect();

    state
        .trace
        .push(objective_terms_cached(dataset, graphs, &wx, &xdx, &state, params));

    for iteration in 1..=params.max_iter {
        for k in 0..dataset.n_views() {
            let x = dataset.view(k);
            state.bases[k] = update_basis(x.view(), &graphs[k], state.representations[k].view())?;
            state.representations[k] = update_representation(
                x.view(),
                &graphs[k],
                &indexes[k],
                state.consensus.view(),
                state.bases[k].view(),
                params.lambda1,
                params.lambda2,
            )?;
        }
        let blocks: Vec<ArrayView2<'_, f64>> = state
            .representations
            .iter()
            .map(|p| p.slice(s![..dataset.paired_count(), ..]))
            .collect();
        state.consensus = update_consensus(&blocks)?;

        let terms = objective_terms_cached(dataset, graphs, &wx, &xdx, &state, params);
        if !terms.total.is_finite() {
            return Err(Error::NonFiniteObjective { iteration });
        }
        let previous = state.trace.last().map(|t| t.total).unwrap_or(f64::INFINITY);
        state.trace.push(terms);
        let relative = (previous - terms.total).abs() / previous.max(1e-12);
        if relative < params.tol {
            break;
        }
    }
    Ok(state)
}

/// Stack the learned representation for all samples in assembled order:
/// the consensus block, then each view's unpaired block.
pub fn assemble_representation(
    state: &ModelState,
    dataset: &MultiViewDataset,
) -> Result<Array2<f64>> {
    let n = dataset.n_samples();
    let n_c = dataset.paired_count();
    let k_dim = state.consensus.ncols();
    if state.consensus.nrows() != n_c || state.representations.len() != dataset.n_views() {
        return Err(Error::ShapeMismatch {
            what: "assemble_representation".into(),
            expected: format!("consensus {n_c} rows, {} views", dataset.n_views()),
            found: format!(
                "consensus {} rows, {} views",
                state.consensus.nrows(),
                state.representations.len()
            ),
        });
    }
    let mut out = Array2::zeros((n, k_dim));
    out.slice_mut(s![..n_c, ..]).assign(&state.consensus);
    for k in 0..dataset.n_views() {
        let segment = dataset.unpaired_segment(k);
        let p = &state.representations[k];
        if p.nrows() != n_c + segment.len() {
            return Err(Error::ShapeMismatch {
                what: format!("representation of view {k}"),
                expected: format!("{} rows", n_c + segment.len()),
                found: format!("{} rows", p.nrows()),
            });
        }
        out.slice_mut(s![segment.start..segment.end, ..])
            .assign(&p.slice(s![n_c.., ..]));
    }
    Ok(out)
}

/// Embed an out-of-sample feature row of view `k`: `p = y U^(k)ᵀ`.
pub fn project_sample(y: ArrayView1<'_, f64>, u: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if y.len() != u.ncols() {
        return Err(Error::ShapeMismatch {
            what: "project_sample".into(),
            expected: format!("{} features", u.ncols()),
            found: format!("{} features", y.len()),
        });
    }
    Ok(u.dot(&y))
}

/// Reconstruct view `f` features from a latent row: `x^(f) = p U^(f)`.
pub fn recover_view(p: ArrayView1<'_, f64>, u: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if p.len() != u.nrows() {
        return Err(Error::ShapeMismatch {
            what: "recover_view".into(),
            expected: format!("{} latent entries", u.nrows()),
            found: format!("{}", p.len()),
        });
    }
    Ok(p.dot(&u))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelManifest {
    params: ModelParams,
    views: usize,
    paired_count: usize,
    view_rows: Vec<usize>,
    view_dims: Vec<usize>,
    iterations: usize,
}

/// Write a fitted model as a directory of per-view CSV matrices plus a
/// manifest with the parameters and seed, and the convergence trace.
pub fn save_model(state: &ModelState, params: &ModelParams, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::io(dir, source))?;
    for (k, basis) in state.bases.iter().enumerate() {
        csvio::write_matrix(&dir.join(format!("basis_{}.csv", k + 1)), basis.view())?;
    }
    for (k, p) in state.representations.iter().enumerate() {
        csvio::write_matrix(
            &dir.join(format!("representation_{}.csv", k + 1)),
            p.view(),
        )?;
    }
    csvio::write_matrix(&dir.join("consensus.csv"), state.consensus.view())?;
    write_trace(&state.trace, &dir.join("trace.csv"))?;

    let manifest = ModelManifest {
        params: params.clone(),
        views: state.bases.len(),
        paired_count: state.consensus.nrows(),
        view_rows: state.representations.iter().map(|p| p.nrows()).collect(),
        view_dims: state.bases.iter().map(|u| u.ncols()).collect(),
        iterations: state.iterations(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    std::fs::write(&path, text).map_err(|source| Error::io(&path, source))?;
    Ok(())
}

/// Load a model directory written by [`save_model`].
pub fn load_model(dir: &Path) -> Result<(ModelParams, ModelState)> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|source| Error::io(&path, source))?;
    let manifest: ModelManifest = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;

    let mut bases = Vec::with_capacity(manifest.views);
    let mut representations = Vec::with_capacity(manifest.views);
    for k in 0..manifest.views {
        let basis = csvio::read_matrix(&dir.join(format!("basis_{}.csv", k + 1)))?;
        let p = csvio::read_matrix(&dir.join(format!("representation_{}.csv", k + 1)))?;
        if basis.ncols() != manifest.view_dims[k]
            || basis.nrows() != manifest.params.latent_dim
            || p.nrows() != manifest.view_rows[k]
        {
            return Err(Error::ShapeMismatch {
                what: format!("model files of view {}", k + 1),
                expected: format!(
                    "basis {} x {}, representation {} rows",
                    manifest.params.latent_dim, manifest.view_dims[k], manifest.view_rows[k]
                ),
                found: format!(
                    "basis {} x {}, representation {} rows",
                    basis.nrows(),
                    basis.ncols(),
                    p.nrows()
                ),
            });
        }
        bases.push(basis);
        representations.push(p);
    }
    let consensus = csvio::read_matrix(&dir.join("consensus.csv"))?;
    let trace = read_trace(&dir.join("trace.csv"))?;
    Ok((
        manifest.params,
        ModelState {
            bases,
            representations,
            consensus,
            trace,
        },
    ))
}

/// Trace CSV: `iteration,total,reconstruction,consensus,l1`.
pub fn write_trace(trace: &[ObjectiveTerms], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    wtr.write_record(["iteration", "total", "reconstruction", "consensus", "l1"])
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    for (i, t) in trace.iter().enumerate() {
        wtr.write_record([
            i.to_string(),
            format!("{}", t.total),
            format!("{}", t.reconstruction),
            format!("{}", t.consensus),
            format!("{}", t.l1),
        ])
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    }
    wtr.flush().map_err(|source| Error::io(path, source))?;
    Ok(())
}

fn read_trace(path: &Path) -> Result<Vec<ObjectiveTerms>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let mut out = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let field = |i: usize| -> Result<f64> {
            record[i].parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: r + 1,
                col: i,
                message: format!("not a number: {:?}", &record[i]),
            })
        };
        out.push(ObjectiveTerms {
            total: field(1)?,
            reconstruction: field(2)?,
            consensus: field(3)?,
            l1: field(4)?,
        });
    }
    Ok(out)
}
