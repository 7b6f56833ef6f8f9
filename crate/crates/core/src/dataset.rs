//! Multi-view data containers, disk format, and incomplete-view splits.
//!
//! # Layout convention
//!
//! Rows are samples. Every view matrix stores its paired samples (those
//! observed in all views) as the first `paired_count` rows, in the same
//! order across views; the remaining rows are samples observed only in that
//! view. The assembled sample order is therefore
//!
//! ```text
//! [ paired block | view-1-only block | view-2-only block | ... ]
//! ```
//!
//! and `sample_ids` maps each assembled position back to the original row
//! index of the source files.
//!
//! # Disk format
//!
//! A dataset directory holds `view_1.csv ... view_v.csv` (headerless
//! decimals, row i = sample i in original order, zero rows for missing
//! views), `mask.csv` (n x v of 0/1 presence flags), an optional
//! `labels.csv` (one integer class id per row), and `split_meta.json`
//! recording the assembled-order permutation plus, for generated splits, the
//! seed and paired ratio.

use std::ops::Range;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};

/// Per-view feature matrices with a paired/unpaired row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<Array2<f64>>,
    paired_count: usize,
    unpaired_counts: Vec<usize>,
    labels: Option<Vec<usize>>,
    sample_ids: Vec<usize>,
}

/// How to round `paired_ratio * n` to a paired-sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundingRule {
    #[default]
    Nearest,
    Floor,
    Ceil,
}

impl RoundingRule {
    fn apply(self, x: f64) -> usize {
        let r = match self {
            RoundingRule::Nearest => x.round(),
            RoundingRule::Floor => x.floor(),
            RoundingRule::Ceil => x.ceil(),
        };
        r as usize
    }
}

impl std::str::FromStr for RoundingRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(RoundingRule::Nearest),
            "floor" => Ok(RoundingRule::Floor),
            "ceil" => Ok(RoundingRule::Ceil),
            other => Err(Error::InvalidConfig {
                reason: format!("unknown rounding rule {other:?}"),
            }),
        }
    }
}

/// Parameters of an incomplete-view split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub paired_ratio: f64,
    pub seed: u64,
    #[serde(default)]
    pub rounding: RoundingRule,
}

impl SplitSpec {
    pub fn new(paired_ratio: f64, seed: u64) -> Self {
        SplitSpec {
            paired_ratio,
            seed,
            rounding: RoundingRule::Nearest,
        }
    }
}

/// The binary selector extracting a view's paired block: an
/// `n_c x (n_c + n_k)` matrix with `G[i, j] = 1` iff `i == j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexMatrix {
    paired: usize,
    total: usize,
}

impl IndexMatrix {
    pub fn paired(&self) -> usize {
        self.paired
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut g = Array2::zeros((self.paired, self.total));
        for i in 0..self.paired {
            g[[i, i]] = 1.0;
        }
        g
    }

    /// `G M`: the first `paired` rows of `m`.
    pub fn select(&self, m: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(m.nrows(), self.total, "selector applied to wrong height");
        m.slice(ndarray::s![..self.paired, ..]).to_owned()
    }

    /// `Gᵀ M`: `m` zero-padded from `paired` to `total` rows.
    pub fn expand(&self, m: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(m.nrows(), self.paired, "expand applied to wrong height");
        let mut out = Array2::zeros((self.total, m.ncols()));
        out.slice_mut(ndarray::s![..self.paired, ..]).assign(&m);
        out
    }
}

/// Returns the paired-block selector `G` for view `view` (0-based).
pub fn index_matrix(dataset: &MultiViewDataset, view: usize) -> Result<IndexMatrix> {
    if view >= dataset.n_views() {
        return Err(Error::ViewOutOfRange {
            view,
            views: dataset.n_views(),
        });
    }
    Ok(IndexMatrix {
        paired: dataset.paired_count,
        total: dataset.paired_count + dataset.unpaired_counts[view],
    })
}

impl MultiViewDataset {
    /// Build a dataset from already-ordered parts, validating the layout
    /// invariants.
    pub fn from_parts(
        views: Vec<Array2<f64>>,
        paired_count: usize,
        unpaired_counts: Vec<usize>,
        labels: Option<Vec<usize>>,
        sample_ids: Vec<usize>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::NoViews);
        }
        if views.len() != unpaired_counts.len() {
            return Err(Error::InvalidDataset {
                reason: "unpaired_counts length differs from view count".into(),
            });
        }
        let n = paired_count + unpaired_counts.iter().sum::<usize>();
        if n == 0 {
            return Err(Error::EmptyView { view: 0 });
        }
        for (k, view) in views.iter().enumerate() {
            if view.ncols() == 0 || view.nrows() == 0 {
                return Err(Error::EmptyView { view: k });
            }
            let expected = paired_count + unpaired_counts[k];
            if view.nrows() != expected {
                return Err(Error::ViewRows {
                    view: k,
                    expected,
                    found: view.nrows(),
                });
            }
            if view.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: format!("view {k}"),
                });
            }
        }
        if let Some(ref l) = labels {
            if l.len() != n {
                return Err(Error::LabelCount {
                    expected: n,
                    found: l.len(),
                });
            }
        }
        if sample_ids.len() != n {
            return Err(Error::InvalidDataset {
                reason: format!("sample_ids has {} entries for {n} samples", sample_ids.len()),
            });
        }
        let mut seen = vec![false; n];
        for &id in &sample_ids {
            if id >= n || seen[id] {
                return Err(Error::InvalidDataset {
                    reason: "sample_ids is not a permutation of 0..n".into(),
                });
            }
            seen[id] = true;
        }
        Ok(MultiViewDataset {
            views,
            paired_count,
            unpaired_counts,
            labels,
            sample_ids,
        })
    }

    /// Build a complete dataset (every sample observed in every view).
    pub fn from_complete(views: Vec<Array2<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::NoViews);
        }
        let n = views[0].nrows();
        for (k, view) in views.iter().enumerate() {
            if view.nrows() != n {
                return Err(Error::ViewRows {
                    view: k,
                    expected: n,
                    found: view.nrows(),
                });
            }
        }
        let v = views.len();
        MultiViewDataset::from_parts(views, n, vec![0; v], labels, (0..n).collect())
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    /// Total samples `n = n_c + Σ n_k`.
    pub fn n_samples(&self) -> usize {
        self.paired_count + self.unpaired_counts.iter().sum::<usize>()
    }

    pub fn paired_count(&self) -> usize {
        self.paired_count
    }

    pub fn unpaired_counts(&self) -> &[usize] {
        &self.unpaired_counts
    }

    pub fn view(&self, k: usize) -> &Array2<f64> {
        &self.views[k]
    }

    pub fn views(&self) -> &[Array2<f64>] {
        &self.views
    }

    /// Feature count of view `k`.
    pub fn view_dim(&self, k: usize) -> usize {
        self.views[k].ncols()
    }

    /// Labels in assembled order, when present.
    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Original row index for each assembled position.
    pub fn sample_ids(&self) -> &[usize] {
        &self.sample_ids
    }

    pub fn is_complete(&self) -> bool {
        self.unpaired_counts.iter().all(|&c| c == 0)
    }

    /// Number of distinct label values, when labels exist.
    pub fn class_count(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| {
            let mut distinct: Vec<usize> = l.clone();
            distinct.sort_unstable();
            distinct.dedup();
            distinct.len()
        })
    }

    /// Assembled position of row `row` of view `k`'s matrix.
    pub fn assembled_position(&self, k: usize, row: usize) -> usize {
        if row < self.paired_count {
            row
        } else {
            self.segment_start(k) + (row - self.paired_count)
        }
    }

    /// Assembled positions of view `k`'s unpaired block.
    pub fn unpaired_segment(&self, k: usize) -> Range<usize> {
        let start = self.segment_start(k);
        start..start + self.unpaired_counts[k]
    }

    fn segment_start(&self, k: usize) -> usize {
        self.paired_count + self.unpaired_counts[..k].iter().sum::<usize>()
    }

    /// The single view owning an unpaired position, `None` for paired ones.
    pub fn owning_view(&self, position: usize) -> Option<usize> {
        if position < self.paired_count {
            return None;
        }
        let mut start = self.paired_count;
        for (k, &count) in self.unpaired_counts.iter().enumerate() {
            if position < start + count {
                return Some(k);
            }
            start += count;
        }
        panic!("position {position} out of range");
    }

    /// Per-feature min-max scaling of every view (off by default in all
    /// pipelines; enable explicitly where parity with raw features is not
    /// needed). Constant features map to zero.
    pub fn min_max_scaled(&self) -> MultiViewDataset {
        let views = self
            .views
            .iter()
            .map(|view| {
                let mut scaled = view.clone();
                for mut col in scaled.columns_mut() {
                    let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
                    let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let range = max - min;
                    if range > 0.0 {
                        col.mapv_inplace(|x| (x - min) / range);
                    } else {
                        col.fill(0.0);
                    }
                }
                scaled
            })
            .collect();
        MultiViewDataset {
            views,
            paired_count: self.paired_count,
            unpaired_counts: self.unpaired_counts.clone(),
            labels: self.labels.clone(),
            sample_ids: self.sample_ids.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SplitMeta {
    paired_ratio: Option<f64>,
    seed: Option<u64>,
    rounding: Option<RoundingRule>,
    paired_count: usize,
    unpaired_counts: Vec<usize>,
    /// Original row index for each assembled position.
    permutation: Vec<usize>,
}

/// Load a dataset directory (see the module docs for the format).
///
/// Samples are reordered so paired rows come first in every view, then
/// unpaired rows grouped by owning view. When `split_meta.json` is present
/// its permutation fixes the within-group order; otherwise groups are sorted
/// by original row index.
pub fn load_views(dir: &Path) -> Result<MultiViewDataset> {
    let mut raw_views = Vec::new();
    loop {
        let path = dir.join(format!("view_{}.csv", raw_views.len() + 1));
        if !path.is_file() {
            break;
        }
        raw_views.push(csvio::read_matrix(&path)?);
    }
    if raw_views.is_empty() {
        return Err(Error::NoViews);
    }
    let v = raw_views.len();

    let mask = csvio::read_mask(&dir.join("mask.csv"))?;
    let n = mask.len();
    if n == 0 {
        return Err(Error::EmptyView { view: 0 });
    }
    if mask[0].len() != v {
        return Err(Error::MaskColumns {
            views: v,
            found: mask[0].len(),
        });
    }
    for (k, view) in raw_views.iter().enumerate() {
        if view.nrows() != n {
            return Err(Error::ViewRows {
                view: k,
                expected: n,
                found: view.nrows(),
            });
        }
        if view.ncols() == 0 {
            return Err(Error::EmptyView { view: k });
        }
    }

    // classify samples: paired (all views) or single-view
    let mut paired = Vec::new();
    let mut singles: Vec<Vec<usize>> = vec![Vec::new(); v];
    for (i, row) in mask.iter().enumerate() {
        let present = row.iter().filter(|&&b| b).count();
        if present == 0 {
            return Err(Error::NoViewForSample { sample: i });
        } else if present == v {
            paired.push(i);
        } else if present == 1 {
            let k = row.iter().position(|&b| b).unwrap();
            singles[k].push(i);
        } else {
            return Err(Error::PartialViews { sample: i });
        }
    }

    let meta_path = dir.join("split_meta.json");
    if meta_path.is_file() {
        let text = std::fs::read_to_string(&meta_path)
            .map_err(|source| Error::io(&meta_path, source))?;
        let meta: SplitMeta = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: meta_path.clone(),
            source,
        })?;
        apply_meta_order(&meta, &mut paired, &mut singles)?;
    } else {
        // groups already ascend by original index
    }

    assemble(raw_views, mask, paired, singles, dir)
}

fn apply_meta_order(
    meta: &SplitMeta,
    paired: &mut Vec<usize>,
    singles: &mut [Vec<usize>],
) -> Result<()> {
    let n: usize = meta.paired_count + meta.unpaired_counts.iter().sum::<usize>();
    if meta.permutation.len() != n || meta.paired_count != paired.len() {
        return Err(Error::MetaMismatch {
            reason: "permutation size disagrees with mask".into(),
        });
    }
    if meta.unpaired_counts.len() != singles.len() {
        return Err(Error::MetaMismatch {
            reason: "view count disagrees with mask".into(),
        });
    }
    let sorted = |v: &[usize]| {
        let mut s = v.to_vec();
        s.sort_unstable();
        s
    };
    let meta_paired = &meta.permutation[..meta.paired_count];
    if sorted(meta_paired) != *paired {
        return Err(Error::MetaMismatch {
            reason: "paired set disagrees with mask".into(),
        });
    }
    let mut offset = meta.paired_count;
    let mut meta_singles = Vec::with_capacity(singles.len());
    for (k, &count) in meta.unpaired_counts.iter().enumerate() {
        let segment = &meta.permutation[offset..offset + count];
        if sorted(segment) != singles[k] {
            return Err(Error::MetaMismatch {
                reason: format!("view {} unpaired set disagrees with mask", k + 1),
            });
        }
        meta_singles.push(segment.to_vec());
        offset += count;
    }
    *paired = meta_paired.to_vec();
    for (slot, order) in singles.iter_mut().zip(meta_singles) {
        *slot = order;
    }
    Ok(())
}

fn assemble(
    raw_views: Vec<Array2<f64>>,
    mask: Vec<Vec<bool>>,
    paired: Vec<usize>,
    singles: Vec<Vec<usize>>,
    dir: &Path,
) -> Result<MultiViewDataset> {
    let v = raw_views.len();
    let paired_count = paired.len();
    let unpaired_counts: Vec<usize> = singles.iter().map(|s| s.len()).collect();
    let _ = mask;

    let mut sample_ids = paired.clone();
    for s in &singles {
        sample_ids.extend_from_slice(s);
    }

    let mut views = Vec::with_capacity(v);
    for (k, raw) in raw_views.iter().enumerate() {
        let m = raw.ncols();
        let rows = paired_count + unpaired_counts[k];
        let mut out = Array2::zeros((rows, m));
        for (r, &orig) in paired.iter().enumerate() {
            out.row_mut(r).assign(&raw.row(orig));
        }
        for (r, &orig) in singles[k].iter().enumerate() {
            out.row_mut(paired_count + r).assign(&raw.row(orig));
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("view {}", k + 1),
            });
        }
        views.push(out);
    }

    let labels_path = dir.join("labels.csv");
    let labels = if labels_path.is_file() {
        let raw = csvio::read_labels(&labels_path)?;
        if raw.len() != sample_ids.len() {
            return Err(Error::LabelCount {
                expected: sample_ids.len(),
                found: raw.len(),
            });
        }
        Some(sample_ids.iter().map(|&orig| raw[orig]).collect())
    } else {
        None
    };

    MultiViewDataset::from_parts(views, paired_count, unpaired_counts, labels, sample_ids)
}

/// Write a dataset directory. Missing rows of a view are stored as zeros;
/// the mask marks them absent. `split` is recorded in `split_meta.json`
/// when the dataset came from a generated split.
pub fn save_views(dataset: &MultiViewDataset, dir: &Path, split: Option<&SplitSpec>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::io(dir, source))?;
    let n = dataset.n_samples();
    let v = dataset.n_views();

    let mut mask = vec![vec![false; v]; n];
    for pos in 0..n {
        let orig = dataset.sample_ids[pos];
        match dataset.owning_view(pos) {
            None => mask[orig].iter_mut().for_each(|b| *b = true),
            Some(k) => mask[orig][k] = true,
        }
    }

    for k in 0..v {
        let view = dataset.view(k);
        let m = view.ncols();
        let mut full = Array2::zeros((n, m));
        for row in 0..view.nrows() {
            let pos = dataset.assembled_position(k, row);
            let orig = dataset.sample_ids[pos];
            full.row_mut(orig).assign(&view.row(row));
        }
        csvio::write_matrix(&dir.join(format!("view_{}.csv", k + 1)), full.view())?;
    }
    csvio::write_mask(&dir.join("mask.csv"), &mask)?;

    if let Some(labels) = dataset.labels() {
        let mut original_order = vec![0usize; n];
        for (pos, &orig) in dataset.sample_ids.iter().enumerate() {
            original_order[orig] = labels[pos];
        }
        csvio::write_labels(&dir.join("labels.csv"), &original_order)?;
    }

    let meta = SplitMeta {
        paired_ratio: split.map(|s| s.paired_ratio),
        seed: split.map(|s| s.seed),
        rounding: split.map(|s| s.rounding),
        paired_count: dataset.paired_count,
        unpaired_counts: dataset.unpaired_counts.clone(),
        permutation: dataset.sample_ids.clone(),
    };
    let meta_path = dir.join("split_meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|source| Error::Json {
        path: meta_path.clone(),
        source,
    })?;
    std::fs::write(&meta_path, text).map_err(|source| Error::io(&meta_path, source))?;
    Ok(())
}

/// Read a labels file (one non-negative integer per row).
pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    csvio::read_labels(path)
}

/// Write a labels file in the format [`load_labels`] reads.
pub fn save_labels(path: &Path, labels: &[usize]) -> Result<()> {
    csvio::write_labels(path, labels)
}

/// Generate an incomplete-view split of a complete dataset.
///
/// `n_c = round(ratio * n)` samples keep all views (chosen uniformly by
/// seed). For two views the remaining `r` samples are assigned, in shuffled
/// order, the first ceil(r/2) to view 1 only and the rest to view 2 only;
/// with more views the remainder is dealt round-robin. Unpaired rows keep
/// their shuffled-by-seed order inside each view.
pub fn make_incomplete_split(
    complete: &MultiViewDataset,
    spec: &SplitSpec,
) -> Result<MultiViewDataset> {
    if !complete.is_complete() {
        return Err(Error::NotComplete);
    }
    if !(spec.paired_ratio > 0.0 && spec.paired_ratio <= 1.0) {
        return Err(Error::InvalidPairedRatio {
            ratio: spec.paired_ratio,
        });
    }
    let n = complete.n_samples();
    let v = complete.n_views();
    let n_c = spec.rounding.apply(spec.paired_ratio * n as f64).min(n);
    if n_c == 0 {
        return Err(Error::EmptyPairedSet {
            ratio: spec.paired_ratio,
            n,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let paired = &order[..n_c];
    let rest = &order[n_c..];
    let mut singles: Vec<Vec<usize>> = vec![Vec::new(); v];
    if v == 2 {
        let first = rest.len().div_ceil(2);
        singles[0].extend_from_slice(&rest[..first]);
        singles[1].extend_from_slice(&rest[first..]);
    } else {
        for (t, &row) in rest.iter().enumerate() {
            singles[t % v].push(row);
        }
    }

    let mut positions = paired.to_vec();
    for s in &singles {
        positions.extend_from_slice(s);
    }

    let mut views = Vec::with_capacity(v);
    for (k, single) in singles.iter().enumerate() {
        let source = complete.view(k);
        let rows = n_c + single.len();
        let mut out = Array2::zeros((rows, source.ncols()));
        for (r, &pos) in paired.iter().enumerate() {
            out.row_mut(r).assign(&source.row(pos));
        }
        for (r, &pos) in single.iter().enumerate() {
            out.row_mut(n_c + r).assign(&source.row(pos));
        }
        views.push(out);
    }

    let labels = complete
        .labels()
        .map(|l| positions.iter().map(|&pos| l[pos]).collect());
    let sample_ids = positions
        .iter()
        .map(|&pos| complete.sample_ids[pos])
        .collect();
    let unpaired_counts = singles.iter().map(|s| s.len()).collect();

    MultiViewDataset::from_parts(views, n_c, unpaired_counts, labels, sample_ids)
}
