//! Clustering evaluation: accuracy by optimal label matching, normalized
//! mutual information, and purity.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Contingency counts between predicted clusters and true classes.
/// Distinct label values are compacted in sorted order, so arbitrary ids
/// are fine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contingency {
    table: Array2<usize>,
    n: usize,
}

fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut distinct: Vec<usize> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mapped = labels
        .iter()
        .map(|l| distinct.binary_search(l).unwrap())
        .collect();
    (mapped, distinct.len())
}

impl Contingency {
    pub fn from_labels(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LengthMismatch {
                left: pred.len(),
                right: truth.len(),
            });
        }
        if pred.is_empty() {
            return Err(Error::EmptyLabels);
        }
        let (p, cp) = compact(pred);
        let (t, ct) = compact(truth);
        let mut table = Array2::zeros((cp, ct));
        for (a, b) in p.iter().zip(t.iter()) {
            table[[*a, *b]] += 1;
        }
        Ok(Contingency {
            table,
            n: pred.len(),
        })
    }

    pub fn table(&self) -> &Array2<usize> {
        &self.table
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn row_sums(&self) -> Vec<usize> {
        self.table
            .rows()
            .into_iter()
            .map(|r| r.iter().sum())
            .collect()
    }

    fn col_sums(&self) -> Vec<usize> {
        self.table
            .columns()
            .into_iter()
            .map(|c| c.iter().sum())
            .collect()
    }
}

/// Clustering accuracy: the best fraction of agreeing samples over
/// injective cluster-to-class maps, found by the Hungarian method on the
/// contingency table (padded with zero-count dummies when cluster and class
/// counts differ).
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let con = Contingency::from_labels(pred, truth)?;
    let (cp, ct) = (con.table.nrows(), con.table.ncols());
    let size = cp.max(ct);
    let mut cost = Array2::<i64>::zeros((size, size));
    for i in 0..cp {
        for j in 0..ct {
            cost[[i, j]] = -(con.table[[i, j]] as i64);
        }
    }
    let assignment = min_cost_assignment(&cost);
    let matched: i64 = assignment
        .iter()
        .enumerate()
        .map(|(row, &col)| -cost[[row, col]])
        .sum();
    Ok(matched as f64 / con.n as f64)
}

/// NMI with sqrt normalization: `I(pred; truth) / sqrt(H(pred) H(truth))`,
/// natural-log entropies from the empirical distributions. Both partitions
/// trivial (single cluster) gives 1.0; exactly one trivial gives 0.0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let con = Contingency::from_labels(pred, truth)?;
    let n = con.n as f64;
    let rows = con.row_sums();
    let cols = con.col_sums();
    let entropy = |sums: &[usize]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_pred = entropy(&rows);
    let h_truth = entropy(&cols);
    if h_pred == 0.0 && h_truth == 0.0 {
        return Ok(1.0);
    }
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for i in 0..rows.len() {
        for j in 0..cols.len() {
            let nij = con.table[[i, j]];
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            mi += (nij / n) * ((nij * n) / (rows[i] as f64 * cols[j] as f64)).ln();
        }
    }
    Ok((mi / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0))
}

/// Purity: fraction of samples belonging to the majority true class of
/// their predicted cluster.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let con = Contingency::from_labels(pred, truth)?;
    let majority: usize = con
        .table
        .rows()
        .into_iter()
        .map(|r| r.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / con.n as f64)
}

/// Hungarian algorithm (potentials formulation) for a square cost matrix;
/// returns the column assigned to each row of a minimum-cost perfect
/// matching.
fn min_cost_assignment(cost: &Array2<i64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    const INF: i64 = i64::MAX / 4;

    // 1-based arrays; p[j] is the row matched to column j, p[0] the row
    // currently being inserted.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force accuracy: maximum matched fraction over all injective
    /// maps from predicted clusters to true classes.
    pub(crate) fn accuracy_brute_force(pred: &[usize], truth: &[usize]) -> f64 {
        let con = Contingency::from_labels(pred, truth).unwrap();
        let (cp, ct) = (con.table().nrows(), con.table().ncols());
        let size = cp.max(ct);
        let mut cols: Vec<usize> = (0..size).collect();
        let mut best = 0usize;
        permute(&mut cols, 0, &mut |perm| {
            let mut matched = 0usize;
            for (i, &j) in perm.iter().enumerate().take(cp) {
                if j < ct {
                    matched += con.table()[[i, j]];
                }
            }
            best = best.max(matched);
        });
        best as f64 / con.n() as f64
    }

    fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, visit);
            items.swap(k, i);
        }
    }

    #[test]
    fn accuracy_is_relabeling_invariant() {
        let truth = [0, 0, 1, 1];
        let pred = [1, 1, 0, 0];
        assert_eq!(accuracy(&pred, &truth).unwrap(), 1.0);
        assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_half_match() {
        let truth = [0, 0, 1, 1];
        let pred = [0, 1, 0, 1];
        assert_eq!(accuracy(&pred, &truth).unwrap(), 0.5);
        assert_eq!(accuracy_brute_force(&pred, &truth), 0.5);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.gen_range(1..30);
            let cp = rng.gen_range(1..=6);
            let ct = rng.gen_range(1..=6);
            let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..cp)).collect();
            let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..ct)).collect();
            let fast = accuracy(&pred, &truth).unwrap();
            let brute = accuracy_brute_force(&pred, &truth);
            assert!(
                (fast - brute).abs() < 1e-12,
                "hungarian {fast} vs brute {brute} for pred {pred:?} truth {truth:?}"
            );
        }
    }

    #[test]
    fn nmi_identical_partitions() {
        let a = [0, 0, 1, 1, 2, 2];
        assert!((nmi(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        // relabeled
        let b = [2, 2, 0, 0, 1, 1];
        assert!((nmi(&b, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nmi_independent_partitions_is_zero() {
        let truth = [0, 0, 1, 1];
        let pred = [0, 1, 0, 1];
        assert_eq!(nmi(&pred, &truth).unwrap(), 0.0);
    }

    #[test]
    fn nmi_trivial_partition_conventions() {
        let flat = [0, 0, 0, 0];
        let split = [0, 0, 1, 1];
        assert_eq!(nmi(&flat, &flat).unwrap(), 1.0);
        assert_eq!(nmi(&flat, &split).unwrap(), 0.0);
        assert_eq!(nmi(&split, &flat).unwrap(), 0.0);
    }

    #[test]
    fn nmi_matches_direct_formula_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let pred: Vec<usize> = (0..8).map(|_| rng.gen_range(0..3)).collect();
            let truth: Vec<usize> = (0..8).map(|_| rng.gen_range(0..3)).collect();
            let got = nmi(&pred, &truth).unwrap();

            // independent evaluation with hash-map counters
            let n = 8.0f64;
            let mut np = std::collections::HashMap::new();
            let mut nt = std::collections::HashMap::new();
            let mut nj = std::collections::HashMap::new();
            for i in 0..8 {
                *np.entry(pred[i]).or_insert(0.0f64) += 1.0;
                *nt.entry(truth[i]).or_insert(0.0f64) += 1.0;
                *nj.entry((pred[i], truth[i])).or_insert(0.0f64) += 1.0;
            }
            let hp: f64 = np.values().map(|c| -(c / n) * (c / n).ln()).sum();
            let ht: f64 = nt.values().map(|c| -(c / n) * (c / n).ln()).sum();
            let mut mi = 0.0;
            for (&(a, b), &c) in &nj {
                mi += (c / n) * ((c * n) / (np[&a] * nt[&b])).ln();
            }
            let expect = if hp == 0.0 && ht == 0.0 {
                1.0
            } else if hp == 0.0 || ht == 0.0 {
                0.0
            } else {
                mi / (hp * ht).sqrt()
            };
            assert!((got - expect).abs() < 1e-12, "got {got}, expect {expect}");
        }
    }

    #[test]
    fn nmi_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let a: Vec<usize> = (0..12).map(|_| rng.gen_range(0..4)).collect();
            let b: Vec<usize> = (0..12).map(|_| rng.gen_range(0..4)).collect();
            assert!((nmi(&a, &b).unwrap() - nmi(&b, &a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn purity_majority_counting() {
        let pred = [0, 0, 0, 1];
        let truth = [0, 1, 0, 1];
        assert_eq!(purity(&pred, &truth).unwrap(), 0.75);
        assert_eq!(purity(&truth, &truth).unwrap(), 1.0);
        // single predicted cluster: modal class frequency
        let one = [0, 0, 0, 0];
        assert_eq!(purity(&one, &truth).unwrap(), 0.5);
    }

    #[test]
    fn relabeling_leaves_all_metrics_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(4..20);
            let c = rng.gen_range(2..5);
            let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
            let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
            // apply a random permutation to predicted ids
            let mut perm: Vec<usize> = (0..c).collect();
            for i in (1..c).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let relabeled: Vec<usize> = pred.iter().map(|&l| perm[l]).collect();
            assert!(
                (accuracy(&pred, &truth).unwrap() - accuracy(&relabeled, &truth).unwrap()).abs()
                    < 1e-12
            );
            assert!((nmi(&pred, &truth).unwrap() - nmi(&relabeled, &truth).unwrap()).abs() < 1e-12);
            assert!(
                (purity(&pred, &truth).unwrap() - purity(&relabeled, &truth).unwrap()).abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn length_mismatch_and_empty_are_errors() {
        assert!(matches!(
            accuracy(&[0, 1], &[0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(accuracy(&[], &[]), Err(Error::EmptyLabels)));
        assert!(nmi(&[0], &[0, 1]).is_err());
        assert!(purity(&[], &[]).is_err());
    }

    #[test]
    fn metrics_never_exceed_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let n = rng.gen_range(1..15);
            let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            assert!(accuracy(&pred, &truth).unwrap() <= 1.0);
            assert!(purity(&pred, &truth).unwrap() <= 1.0);
            assert!(nmi(&pred, &truth).unwrap() <= 1.0);
        }
    }
}
