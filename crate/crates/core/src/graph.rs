//! Binary symmetric k-nearest-neighbor graphs and their degree diagonals.

use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// A binary symmetric neighbor graph stored as sorted per-row adjacency
/// lists, with self-loops on every node, plus the degree of each node.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    adjacency: Vec<Vec<usize>>,
    degrees: Vec<f64>,
}

impl NeighborGraph {
    /// Build a graph from explicit adjacency lists (self-loops are kept as
    /// given, not added). Mostly useful for tests and diagnostics;
    /// [`knn_graph`] is the production constructor.
    pub fn from_adjacency(adjacency: Vec<Vec<usize>>) -> Result<Self> {
        let n = adjacency.len();
        let mut rows: Vec<Vec<usize>> = adjacency;
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            if let Some(&j) = row.iter().find(|&&j| j >= n) {
                return Err(Error::AdjacencyRange { j, n });
            }
        }
        for (i, row) in rows.iter().enumerate() {
            for &j in row {
                if rows[j].binary_search(&i).is_err() {
                    return Err(Error::AsymmetricAdjacency { i, j });
                }
            }
        }
        let degrees = rows.iter().map(|r| r.len() as f64).collect();
        Ok(NeighborGraph {
            adjacency: rows,
            degrees,
        })
    }

    /// Node count.
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Sorted neighbor ids of node `i`, including `i` itself when the graph
    /// has self-loops.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// `D[i, i] = Σ_j W[i, j]`.
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Number of stored (directed) adjacency entries.
    pub fn nnz(&self) -> usize {
        self.adjacency.iter().map(|r| r.len()).sum()
    }

    /// Dense `W M` for a row-major dense matrix `M`.
    pub fn matmul(&self, m: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(m.nrows(), self.len(), "graph applied to wrong height");
        let cols = m.ncols();
        let mut out = Array2::zeros((self.len(), cols));
        let owned;
        let src: &[f64] = match m.as_slice() {
            Some(s) => s,
            None => {
                owned = m.to_owned();
                owned.as_slice().expect("standard layout")
            }
        };
        for (i, row) in self.adjacency.iter().enumerate() {
            let mut acc = vec![0.0f64; cols];
            for &j in row {
                let s = &src[j * cols..(j + 1) * cols];
                for (a, &x) in acc.iter_mut().zip(s) {
                    *a += x;
                }
            }
            out.row_mut(i)
                .as_slice_mut()
                .expect("standard layout")
                .copy_from_slice(&acc);
        }
        out
    }

    /// Dense symmetric 0/1 weight matrix; for inspection and small tests.
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.len();
        let mut w = Array2::zeros((n, n));
        for (i, row) in self.adjacency.iter().enumerate() {
            for &j in row {
                w[[i, j]] = 1.0;
            }
        }
        w
    }

    /// Debug dump: one `i,j` line per stored edge with `i <= j`.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        for (i, row) in self.adjacency.iter().enumerate() {
            for &j in row {
                if i <= j {
                    wtr.write_record([i.to_string(), j.to_string()])
                        .map_err(|source| Error::Csv {
                            path: path.to_path_buf(),
                            source,
                        })?;
                }
            }
        }
        wtr.flush().map_err(|source| Error::io(path, source))?;
        Ok(())
    }
}

/// Squared Euclidean distance with a fixed feature-order summation, so the
/// value for a pair of rows does not depend on where the rows sit in the
/// matrix (permutation equivariance holds bit-exactly).
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let o = c * 4;
        for l in 0..4 {
            let d = a[o + l] - b[o + l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        let d = a[i] - b[i];
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Build the binary kNN graph of a view: `W[i, j] = 1` iff `i` is among the
/// `neighbors` nearest samples of `j` by Euclidean distance or vice versa,
/// plus a self-loop on every node. Distance ties break toward the lower
/// sample index.
pub fn knn_graph(view: ArrayView2<'_, f64>, neighbors: usize) -> Result<NeighborGraph> {
    let n = view.nrows();
    if n < 2 {
        return Err(Error::TooFewSamples { found: n });
    }
    if neighbors == 0 || neighbors >= n {
        return Err(Error::NeighborCount {
            neighbors,
            samples: n,
        });
    }
    if view.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "knn input".into(),
        });
    }

    let owned = view.to_owned();
    let flat = owned.as_slice().expect("standard layout");
    let m = owned.ncols();
    let row = |i: usize| &flat[i * m..(i + 1) * m];

    let mut adjacency: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for j in 0..n {
        candidates.clear();
        for i in 0..n {
            if i != j {
                candidates.push((sq_dist(row(i), row(j)), i));
            }
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
        };
        candidates.select_nth_unstable_by(neighbors - 1, cmp);
        for &(_, i) in &candidates[..neighbors] {
            adjacency[j].push(i);
            adjacency[i].push(j);
        }
    }
    for row in adjacency.iter_mut() {
        row.sort_unstable();
        row.dedup();
    }
    let degrees = adjacency.iter().map(|r| r.len() as f64).collect();
    Ok(NeighborGraph { adjacency, degrees })
}

/// Neighbor-count heuristic: with `m = n / c` samples per cluster, use 10
/// once clusters are comfortably larger than that (m >= 30), otherwise
/// `max(min(m - 4, 10), 2)`.
pub fn default_neighbor_count(n: usize, c: usize) -> usize {
    assert!(c >= 1 && n >= c, "need n >= c >= 1");
    let m = n / c;
    if m >= 30 {
        10
    } else {
        m.saturating_sub(4).min(10).max(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_point_line() {
        let x = array![[0.0], [1.0], [10.0]];
        let g = knn_graph(x.view(), 1).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
        assert!(g.has_edge(1, 2) && g.has_edge(2, 1));
        assert!(!g.has_edge(0, 2));
        assert!((0..3).all(|i| g.has_edge(i, i)));
        assert_eq!(g.degrees(), &[2.0, 3.0, 2.0]);
    }

    #[test]
    fn duplicate_points_tie_break_by_index() {
        let x = array![[1.0], [1.0], [1.0], [5.0]];
        let g = knn_graph(x.view(), 1).unwrap();
        // 0's nearest is 1, 1's nearest is 0, 2's nearest is 0, 3's nearest is 0
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(0, 2));
        assert!(g.has_edge(0, 3));
        assert!(!g.has_edge(1, 2));
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
            }
        }
    }

    #[test]
    fn symmetric_binary_positive_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..20 {
            let n = rng.gen_range(2..30);
            let d = rng.gen_range(1..5);
            let k = rng.gen_range(1..n);
            let x = Array2::from_shape_fn((n, d), |_| rng.gen::<f64>());
            let g = knn_graph(x.view(), k).unwrap();
            let w = g.to_dense();
            for i in 0..n {
                assert!(g.degree(i) >= 1.0, "trial {trial}");
                assert_eq!(w[[i, i]], 1.0);
                for j in 0..n {
                    assert_eq!(w[[i, j]], w[[j, i]]);
                    assert!(w[[i, j]] == 0.0 || w[[i, j]] == 1.0);
                }
                let row_sum: f64 = (0..n).map(|j| w[[i, j]]).sum();
                assert_eq!(row_sum, g.degree(i));
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = rng.gen_range(4..20);
            let d = rng.gen_range(1..4);
            let k = rng.gen_range(1..n.min(5));
            let x = Array2::from_shape_fn((n, d), |_| rng.gen::<f64>());
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let mut y = Array2::zeros((n, d));
            for (new, &old) in perm.iter().enumerate() {
                y.row_mut(new).assign(&x.row(old));
            }
            let gx = knn_graph(x.view(), k).unwrap();
            let gy = knn_graph(y.view(), k).unwrap();
            for new_i in 0..n {
                for new_j in 0..n {
                    assert_eq!(
                        gy.has_edge(new_i, new_j),
                        gx.has_edge(perm[new_i], perm[new_j])
                    );
                }
            }
        }
    }

    #[test]
    fn neighbor_count_heuristic() {
        assert_eq!(default_neighbor_count(2000, 10), 10);
        assert_eq!(default_neighbor_count(90, 10), 5);
        assert_eq!(default_neighbor_count(12, 6), 2);
        assert_eq!(default_neighbor_count(195, 5), 10); // m = 39 >= 30
        assert_eq!(default_neighbor_count(29, 1), 10); // m = 29 -> min(25, 10)
    }

    #[test]
    fn rejects_bad_neighbor_counts() {
        let x = array![[0.0], [1.0], [2.0]];
        assert!(knn_graph(x.view(), 3).is_err());
        assert!(knn_graph(x.view(), 0).is_err());
        let one = array![[0.0]];
        assert!(knn_graph(one.view(), 1).is_err());
    }

    #[test]
    fn from_adjacency_validates_symmetry() {
        assert!(NeighborGraph::from_adjacency(vec![vec![0, 1], vec![0, 1]]).is_ok());
        assert!(matches!(
            NeighborGraph::from_adjacency(vec![vec![0, 1], vec![1]]),
            Err(Error::AsymmetricAdjacency { .. })
        ));
    }

    #[test]
    fn matmul_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((12, 3), |_| rng.gen::<f64>());
        let g = knn_graph(x.view(), 3).unwrap();
        let p = Array2::from_shape_fn((12, 4), |_| rng.gen::<f64>());
        let fast = g.matmul(p.view());
        let dense = g.to_dense().dot(&p);
        for (a, b) in fast.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_list_dump() {
        let dir = tempfile::tempdir().unwrap();
        let x = array![[0.0], [1.0], [10.0]];
        let g = knn_graph(x.view(), 1).unwrap();
        let path = dir.path().join("edges.csv");
        g.write_edge_list(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, vec!["0,0", "0,1", "1,1", "1,2", "2,2"]);
    }

    #[test]
    fn exact_factorizations_preserve_neighbor_structure() {
        // For X = P U with row-orthonormal U, pairwise distances of the
        // latent rows equal those of the reconstructed samples, so neighbor
        // sets computed from either agree.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let n = rng.gen_range(5..15);
            let k = rng.gen_range(1..4);
            let m = rng.gen_range(k..k + 6);
            let raw = Array2::from_shape_fn((k, m), |_| rng.gen::<f64>() - 0.5);
            let u = crate::linalg::orthonormalize_rows(raw.view()).unwrap();
            let p = Array2::from_shape_fn((n, k), |_| rng.gen::<f64>() * 4.0 - 2.0);
            let x = p.dot(&u);
            for i in 0..n {
                for j in 0..n {
                    let dl = sq_dist(
                        p.row(i).as_slice().unwrap(),
                        p.row(j).as_slice().unwrap(),
                    );
                    let dr = sq_dist(
                        x.row(i).as_slice().unwrap(),
                        x.row(j).as_slice().unwrap(),
                    );
                    assert!((dl - dr).abs() <= 1e-9 * dl.max(1.0));
                }
            }
            let kn = 2.min(n - 1);
            let gp = knn_graph(p.view(), kn).unwrap();
            let gx = knn_graph(x.view(), kn).unwrap();
            // distances match to rounding only, so compare structurally via
            // the dense matrices
            assert_eq!(gp.to_dense(), gx.to_dense());
        }
    }
}
