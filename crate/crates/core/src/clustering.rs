//! Lloyd's k-means with k-means++ seeding and deterministic restarts.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub clusters: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl KMeansParams {
    /// 20 restarts by default; restarts damp the seed variance that would
    /// otherwise dominate small-scale comparisons.
    pub fn new(clusters: usize) -> Self {
        KMeansParams {
            clusters,
            restarts: 20,
            max_iter: 100,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.restarts == 0 || self.max_iter == 0 {
            return Err(Error::InvalidKMeans {
                reason: "clusters, restarts, and max_iter must all be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared distances of the returned labeling.
    pub wcss: f64,
    /// Lloyd iterations of the winning restart.
    pub iterations: usize,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cluster rows of `points` into `params.clusters` groups. Best of
/// `params.restarts` runs by WCSS; per-restart seeds derive from the master
/// seed, so results are reproducible. Empty clusters are repaired by moving
/// in the point farthest from its current center.
pub fn kmeans(points: ArrayView2<'_, f64>, params: &KMeansParams) -> Result<KMeansResult> {
    params.validate()?;
    let n = points.nrows();
    if n < params.clusters {
        return Err(Error::TooManyClusters {
            clusters: params.clusters,
            samples: n,
        });
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "k-means input".into(),
        });
    }

    let mut best: Option<KMeansResult> = None;
    for restart in 0..params.restarts {
        let seed = params.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let candidate = lloyd(points, params, seed);
        let better = match &best {
            None => true,
            Some(b) => candidate.wcss < b.wcss,
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd(points: ArrayView2<'_, f64>, params: &KMeansParams, seed: u64) -> KMeansResult {
    let n = points.nrows();
    let d = points.ncols();
    let c = params.clusters;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centers = plus_plus_seeds(points, c, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut iterations = 0;

    for _ in 0..params.max_iter {
        iterations += 1;
        let mut changed = false;
        for i in 0..n {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for (j, center) in centers.rows().into_iter().enumerate() {
                let dist = sq_dist(points.row(i), center);
                if dist < best_d {
                    best_d = dist;
                    best_c = j;
                }
            }
            if labels[i] != best_c {
                labels[i] = best_c;
                changed = true;
            }
        }

        repair_empty_clusters(points, &centers, &mut labels, c);

        let mut sums = Array2::<f64>::zeros((c, d));
        let mut counts = vec![0usize; c];
        for i in 0..n {
            counts[labels[i]] += 1;
            let mut row = sums.row_mut(labels[i]);
            row += &points.row(i);
        }
        for j in 0..c {
            if counts[j] > 0 {
                let mut row = sums.row_mut(j);
                row /= counts[j] as f64;
            } else {
                sums.row_mut(j).assign(&centers.row(j));
            }
        }
        centers = sums;

        if !changed {
            break;
        }
    }

    let wcss = labels
        .iter()
        .enumerate()
        .map(|(i, &j)| sq_dist(points.row(i), centers.row(j)))
        .sum();
    KMeansResult {
        labels,
        wcss,
        iterations,
    }
}

/// k-means++: first center uniform, then each next center sampled with
/// probability proportional to squared distance from the chosen set.
fn plus_plus_seeds(points: ArrayView2<'_, f64>, c: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let d = points.ncols();
    let mut centers = Array2::zeros((c, d));
    let mut chosen = vec![false; n];

    let first = rng.gen_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    chosen[first] = true;

    let mut dist2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), centers.row(0)))
        .collect();

    for j in 1..c {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut cum = 0.0;
            let mut pick = None;
            for (i, &w) in dist2.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                cum += w;
                if cum >= target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| {
                dist2
                    .iter()
                    .rposition(|&w| w > 0.0)
                    .expect("total > 0 implies a positive weight")
            })
        } else {
            // all remaining points coincide with a center
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[pick] = true;
        centers.row_mut(j).assign(&points.row(pick));
        for i in 0..n {
            let dist = sq_dist(points.row(i), centers.row(j));
            if dist < dist2[i] {
                dist2[i] = dist;
            }
        }
    }
    centers
}

/// Give every empty cluster the point farthest from its current center,
/// taken from clusters that keep at least one member. Ties break toward the
/// lower point index.
fn repair_empty_clusters(
    points: ArrayView2<'_, f64>,
    centers: &Array2<f64>,
    labels: &mut [usize],
    c: usize,
) {
    let n = labels.len();
    let mut counts = vec![0usize; c];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for empty in 0..c {
        if counts[empty] > 0 {
            continue;
        }
        let mut far_i = None;
        let mut far_d = -1.0;
        for i in 0..n {
            if counts[labels[i]] <= 1 {
                continue;
            }
            let dist = sq_dist(points.row(i), centers.row(labels[i]));
            if dist > far_d {
                far_d = dist;
                far_i = Some(i);
            }
        }
        if let Some(i) = far_i {
            counts[labels[i]] -= 1;
            labels[i] = empty;
            counts[empty] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn separated_blobs_split_exactly() {
        let pts = array![[0.0], [0.1], [10.0], [10.1]];
        let r = kmeans(pts.view(), &KMeansParams::new(2)).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[2], r.labels[3]);
        assert_ne!(r.labels[0], r.labels[2]);
    }

    #[test]
    fn single_cluster_wcss_is_total_variance() {
        let pts = array![[1.0], [2.0], [3.0], [6.0]];
        let r = kmeans(pts.view(), &KMeansParams::new(1)).unwrap();
        assert!(r.labels.iter().all(|&l| l == 0));
        let mean = 3.0;
        let expect: f64 = [1.0f64, 2.0, 3.0, 6.0]
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum();
        assert!((r.wcss - expect).abs() < 1e-12);
    }

    #[test]
    fn matches_exhaustive_two_partition_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let pts = Array2::from_shape_fn((6, 1), |_| rng.gen::<f64>() * 10.0);
            let r = kmeans(pts.view(), &KMeansParams::new(2)).unwrap();

            // brute force over all assignments of 6 points to 2 groups
            let mut best = f64::INFINITY;
            for assign in 0u32..(1 << 6) {
                let groups: Vec<usize> = (0..6).map(|i| ((assign >> i) & 1) as usize).collect();
                if !groups.contains(&0) || !groups.contains(&1) {
                    continue;
                }
                let mut wcss = 0.0;
                for g in 0..2 {
                    let members: Vec<usize> =
                        (0..6).filter(|&i| groups[i] == g).collect();
                    let mean: f64 =
                        members.iter().map(|&i| pts[[i, 0]]).sum::<f64>() / members.len() as f64;
                    wcss += members
                        .iter()
                        .map(|&i| (pts[[i, 0]] - mean) * (pts[[i, 0]] - mean))
                        .sum::<f64>();
                }
                best = best.min(wcss);
            }
            assert!(
                (r.wcss - best).abs() <= 1e-9 * best.max(1.0),
                "kmeans {} vs brute force {best}",
                r.wcss
            );
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = Array2::from_shape_fn((40, 3), |_| rng.gen::<f64>());
        let params = KMeansParams::new(4);
        let a = kmeans(pts.view(), &params).unwrap();
        let b = kmeans(pts.view(), &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn row_permutation_only_relabels() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pts = array![[0.0], [0.2], [5.0], [5.2], [9.0], [9.3]];
        let perm = [3usize, 0, 5, 1, 4, 2];
        let mut shuffled = Array2::zeros((6, 1));
        for (new, &old) in perm.iter().enumerate() {
            shuffled.row_mut(new).assign(&pts.row(old));
        }
        let _ = &mut rng;
        let params = KMeansParams::new(3);
        let a = kmeans(pts.view(), &params).unwrap();
        let b = kmeans(shuffled.view(), &params).unwrap();
        // same partition up to relabeling
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(
                    a.labels[perm[i]] == a.labels[perm[j]],
                    b.labels[i] == b.labels[j]
                );
            }
        }
    }

    #[test]
    fn too_many_clusters_rejected() {
        let pts = array![[0.0], [1.0]];
        assert!(matches!(
            kmeans(pts.view(), &KMeansParams::new(3)),
            Err(Error::TooManyClusters { .. })
        ));
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let pts = array![[1.0], [1.0], [1.0], [1.0]];
        let r = kmeans(pts.view(), &KMeansParams::new(2)).unwrap();
        assert_eq!(r.labels.len(), 4);
        assert!(r.wcss <= 1e-12);
    }
}
