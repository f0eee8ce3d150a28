//! Small dense linear algebra for the per-cell matrices (`k_K` rarely exceeds
//! a dozen). Storage is `nalgebra::DMatrix`.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative threshold below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-10;

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |a, &v| a.max(v.abs()))
}

/// Singular values in decreasing order.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol` times the largest.
pub fn numerical_rank(m: &Mat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        None => 0,
        Some(&0.0) => 0,
        Some(&top) => s.iter().filter(|&&v| v > rel_tol * top).count(),
    }
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Cholesky-based SPD test; the matrix must also be symmetric to `1e-12`
/// relative.
pub fn is_spd(m: &Mat) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    if m.nrows() == 0 {
        return true;
    }
    let scale = max_abs(m);
    if scale == 0.0 || !scale.is_finite() {
        return false;
    }
    if max_abs(&(m - m.transpose())) > 1e-12 * scale {
        return false;
    }
    symmetrize(m).cholesky().is_some()
}

/// Inverse of an SPD matrix, `None` when the factorization fails.
pub fn spd_inverse(m: &Mat) -> Option<Mat> {
    symmetrize(m).cholesky().map(|c| symmetrize(&c.inverse()))
}

/// Orthonormal basis of `Im(a)^⊥`, built deterministically.
///
/// The columns of `a` are first orthonormalized (modified Gram-Schmidt with
/// one reorthogonalization pass). Canonical basis vectors are then projected
/// off everything accepted so far, and the candidate with the largest
/// residual norm is normalized and accepted, until `n - rank(a)` columns are
/// found. Each column is signed so that its largest-magnitude entry is
/// positive.
///
/// Returns `None` when `a` does not have full column rank (its last singular
/// value falls below [`RANK_TOL`] times the first).
pub fn complement_basis(a: &Mat) -> Option<Mat> {
    let n = a.nrows();
    let r = a.ncols();
    if r > n {
        return None;
    }
    let s = singular_values(a);
    if r > 0 && (s[0] == 0.0 || s[r - 1] < RANK_TOL * s[0]) {
        return None;
    }

    let mut accepted: Vec<Vector> = Vec::with_capacity(n);
    for j in 0..r {
        let mut v = a.column(j).into_owned();
        project_off(&mut v, &accepted);
        let nv = v.norm();
        v /= nv;
        accepted.push(v);
    }

    let mut out: Vec<Vector> = Vec::with_capacity(n - r);
    let mut used = vec![false; n];
    for _ in 0..(n - r) {
        let mut best: Option<(usize, Vector, f64)> = None;
        for (i, taken) in used.iter().enumerate() {
            if *taken {
                continue;
            }
            let mut v = Vector::zeros(n);
            v[i] = 1.0;
            project_off(&mut v, &accepted);
            let nv = v.norm();
            if best.as_ref().is_none_or(|b| nv > b.2) {
                best = Some((i, v, nv));
            }
        }
        let (i, mut v, nv) = best?;
        used[i] = true;
        v /= nv;
        let pivot = v.iter().enumerate().fold(0, |k, (m, x)| {
            if x.abs() > v[k].abs() {
                m
            } else {
                k
            }
        });
        if v[pivot] < 0.0 {
            v = -v;
        }
        accepted.push(v.clone());
        out.push(v);
    }
    Some(Mat::from_columns(&out))
}

fn project_off(v: &mut Vector, basis: &[Vector]) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
}

/// Eigen-decomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns eigenvalues in increasing order and the matching eigenvectors as
/// columns. Sweeps stop when the off-diagonal Frobenius norm falls below
/// `tol` times the matrix norm.
pub fn jacobi_eigen(m: &Mat, tol: f64) -> (Vec<f64>, Mat) {
    let n = m.nrows();
    let mut a = symmetrize(m);
    let mut v = Mat::identity(n, n);
    let norm = a.norm();
    if norm == 0.0 {
        return (vec![0.0; n], v);
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= tol * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = idx.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_columns(&idx.iter().map(|&i| v.column(i).into_owned()).collect::<Vec<_>>());
    (values, vectors)
}
