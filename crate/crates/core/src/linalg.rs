//! Small dense linear-algebra helpers: the orthogonal Procrustes solver and
//! row orthonormalization.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

fn to_na(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_row_iterator(a.nrows(), a.ncols(), a.iter().cloned())
}

fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Max-norm of `U Uᵀ − I`; zero for a matrix with orthonormal rows.
pub fn row_orthonormality_defect(u: ArrayView2<'_, f64>) -> f64 {
    let gram = u.dot(&u.t());
    let k = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[[i, j]] - target).abs());
        }
    }
    worst
}

/// Maximize `tr(S U)` over matrices `U` (k x m) with orthonormal rows, for a
/// given `S` of shape m x k with k <= m.
///
/// Computed from the thin SVD `S = B Σ Jᵀ` as `U = J Bᵀ`; the attained trace
/// equals the nuclear norm of `S`. When the SVD iteration fails, falls back
/// to an eigendecomposition of `SᵀS` with deterministic completion of any
/// rank-deficient directions.
pub fn procrustes_rows(s: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (m, k) = (s.nrows(), s.ncols());
    if k > m {
        return Err(Error::ShapeMismatch {
            what: "procrustes input".into(),
            expected: "rows >= cols".into(),
            found: format!("{m} x {k}"),
        });
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "procrustes input".into(),
        });
    }

    if let Some(svd) = to_na(s).try_svd(true, true, f64::EPSILON, 0) {
        let b = svd.u.as_ref().expect("u requested");
        let j_t = svd.v_t.as_ref().expect("v_t requested");
        // U = J Bᵀ
        let u = j_t.transpose() * b.transpose();
        let u = from_na(&u);
        if row_orthonormality_defect(u.view()) <= 1e-10 {
            return Ok(u);
        }
    }
    procrustes_rows_gram(s)
}

/// Procrustes via the k x k Gram matrix `SᵀS`: eigenvectors give the right
/// singular vectors, left vectors come from `S j / σ`, and directions with
/// negligible σ are completed by lexicographic Gram-Schmidt.
fn procrustes_rows_gram(s: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (m, k) = (s.nrows(), s.ncols());
    let gram = to_na(s.t().dot(&s).view());
    let eig = gram.symmetric_eigen();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let sigma_max = eig.eigenvalues[order[0]].max(0.0).sqrt();
    let tol = sigma_max * 1e-12;

    let mut right = Vec::with_capacity(k); // j_i, length k
    let mut left: Vec<Array1<f64>> = Vec::with_capacity(k); // b_i, length m
    let mut deficient = Vec::new();
    for &idx in &order {
        let sigma = eig.eigenvalues[idx].max(0.0).sqrt();
        let j: Array1<f64> = Array1::from_iter(eig.eigenvectors.column(idx).iter().cloned());
        if sigma > tol {
            let b = s.dot(&j) / sigma;
            left.push(b);
            right.push(j);
        } else {
            deficient.push(j);
        }
    }
    // Re-orthonormalize the computed left vectors (the Gram route squares the
    // condition number) and complete the deficient directions.
    let mut basis = orthonormal_rows_from(left, m)?;
    let missing = k - basis.len();
    if missing > 0 {
        complete_with_unit_vectors(&mut basis, m, missing)?;
    }
    right.extend(deficient);

    let mut u = Array2::zeros((k, m));
    for (j, b) in right.iter().zip(basis.iter()) {
        for r in 0..k {
            for c in 0..m {
                u[[r, c]] += j[r] * b[c];
            }
        }
    }
    Ok(u)
}

/// Orthonormalize the rows of `a` by modified Gram-Schmidt (two passes).
/// Rows that collapse to numeric zero are replaced by lexicographic
/// completions so the result always has exactly `a.nrows()` orthonormal rows.
pub fn orthonormalize_rows(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (k, m) = (a.nrows(), a.ncols());
    if k > m {
        return Err(Error::ShapeMismatch {
            what: "orthonormalization".into(),
            expected: "rows <= cols".into(),
            found: format!("{k} x {m}"),
        });
    }
    let rows: Vec<Array1<f64>> = a.rows().into_iter().map(|r| r.to_owned()).collect();
    let mut basis = orthonormal_rows_from(rows, m)?;
    let missing = k - basis.len();
    if missing > 0 {
        complete_with_unit_vectors(&mut basis, m, missing)?;
    }
    let mut out = Array2::zeros((k, m));
    for (i, b) in basis.iter().enumerate() {
        out.row_mut(i).assign(b);
    }
    Ok(out)
}

fn project_out(basis: &[Array1<f64>], v: &mut Array1<f64>) {
    for b in basis {
        let coef = b.dot(v);
        v.zip_mut_with(b, |x, &y| *x -= coef * y);
    }
}

/// MGS with one re-orthogonalization pass; drops numerically dependent rows.
fn orthonormal_rows_from(rows: Vec<Array1<f64>>, m: usize) -> Result<Vec<Array1<f64>>> {
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(rows.len());
    for mut v in rows {
        if v.len() != m {
            return Err(Error::ShapeMismatch {
                what: "orthonormal basis row".into(),
                expected: format!("length {m}"),
                found: format!("length {}", v.len()),
            });
        }
        let scale = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if scale == 0.0 {
            continue;
        }
        project_out(&basis, &mut v);
        project_out(&basis, &mut v);
        let norm = v.dot(&v).sqrt();
        if norm > 1e-10 * scale.max(1.0) {
            basis.push(v / norm);
        }
    }
    Ok(basis)
}

/// Append `count` rows drawn from the unit vectors e_1, e_2, ... in index
/// order, Gram-Schmidt'ed against the existing rows.
fn complete_with_unit_vectors(
    basis: &mut Vec<Array1<f64>>,
    m: usize,
    count: usize,
) -> Result<()> {
    let mut added = 0;
    for axis in 0..m {
        if added == count {
            break;
        }
        let mut v = Array1::zeros(m);
        v[axis] = 1.0;
        project_out(basis, &mut v);
        project_out(basis, &mut v);
        let norm = v.dot(&v).sqrt();
        if norm > 1e-6 {
            basis.push(v / norm);
            added += 1;
        }
    }
    if added < count {
        return Err(Error::NonFinite {
            what: "orthonormal completion".into(),
        });
    }
    Ok(())
}

/// `tr(S U)` for S (m x k) and U (k x m).
pub fn trace_product(s: ArrayView2<'_, f64>, u: ArrayView2<'_, f64>) -> f64 {
    // tr(S U) = Σ_ij S[i,j] U[j,i]
    let mut acc = 0.0;
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            acc += s[[i, j]] * u[[j, i]];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |_| rng.gen::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn positive_diagonal_gives_identity() {
        let s = array![[2.0, 0.0], [0.0, 1.0]];
        let u = procrustes_rows(s.view()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((u[[i, j]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn antidiagonal_example() {
        let s = array![[0.0, 2.0], [1.0, 0.0]];
        let u = procrustes_rows(s.view()).unwrap();
        let expect = array![[0.0, 1.0], [1.0, 0.0]];
        for (a, b) in u.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12, "got {u:?}");
        }
        // attained trace is the nuclear norm σ1 + σ2 = 3
        assert!((trace_product(s.view(), u.view()) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_input_still_orthonormal() {
        // rank-1 outer product, k = 3
        let mut s = Array2::zeros((5, 3));
        for i in 0..5 {
            for j in 0..3 {
                s[[i, j]] = (i as f64 + 1.0) * (j as f64 - 1.0);
            }
        }
        let u = procrustes_rows(s.view()).unwrap();
        assert!(row_orthonormality_defect(u.view()) <= 1e-10);
        let gram_route = super::procrustes_rows_gram(s.view()).unwrap();
        assert!(row_orthonormality_defect(gram_route.view()) <= 1e-10);
        // both routes attain the same trace
        let t1 = trace_product(s.view(), u.view());
        let t2 = trace_product(s.view(), gram_route.view());
        assert!((t1 - t2).abs() <= 1e-9 * t1.abs().max(1.0));
    }

    #[test]
    fn zero_matrix_is_handled() {
        let s = Array2::zeros((4, 2));
        let u = procrustes_rows(s.view()).unwrap();
        assert!(row_orthonormality_defect(u.view()) <= 1e-10);
    }

    #[test]
    fn gram_fallback_matches_svd_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = rng.gen_range(2..10);
            let k = rng.gen_range(1..=m);
            let s = random_matrix(&mut rng, m, k);
            let a = procrustes_rows(s.view()).unwrap();
            let b = procrustes_rows_gram(s.view()).unwrap();
            let ta = trace_product(s.view(), a.view());
            let tb = trace_product(s.view(), b.view());
            assert!((ta - tb).abs() <= 1e-8 * ta.abs().max(1.0));
            assert!(row_orthonormality_defect(a.view()) <= 1e-10);
            assert!(row_orthonormality_defect(b.view()) <= 1e-9);
        }
    }

    #[test]
    fn orthonormalize_rows_spans_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 3, 7);
        let q = orthonormalize_rows(a.view()).unwrap();
        assert!(row_orthonormality_defect(q.view()) <= 1e-12);
        // projecting the original rows onto the basis reproduces them
        for row in a.rows() {
            let coeffs = q.dot(&row.to_owned());
            let back = coeffs.dot(&q);
            for (x, y) in row.iter().zip(back.iter()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn orthonormalize_completes_dependent_rows() {
        let a = array![[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let q = orthonormalize_rows(a.view()).unwrap();
        assert!(row_orthonormality_defect(q.view()) <= 1e-12);
    }

    #[test]
    fn too_many_rows_is_an_error() {
        let a = Array2::<f64>::zeros((4, 2));
        assert!(orthonormalize_rows(a.view()).is_err());
        assert!(procrustes_rows(a.view()).is_ok());
        assert!(procrustes_rows(a.t()).is_err());
    }
}
