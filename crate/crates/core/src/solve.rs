//! Sparse symmetric storage, preconditioned conjugate gradients and local
//! flux recovery.

use crate::dense::{Mat, Vector};
use crate::mesh::Mesh;
use crate::par::{self, Execution};
use crate::{Error, Result};

/// Symmetric matrix stored as its lower triangle (diagonal included) in
/// compressed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    /// Builds the matrix from lower-triangle triplets `(row, col, value)`
    /// with `row >= col`. Duplicates are summed in input order, so the
    /// result only depends on the order of the triplets.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<SparseSymmetric> {
        if let Some(&(i, j, _)) = triplets.iter().find(|&&(i, j, _)| i >= n || j > i) {
            return Err(Error::InternalConsistency(format!(
                "triplet ({i}, {j}) is outside the lower triangle of a {n}x{n} matrix"
            )));
        }
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                cols.push(j);
                values.push(v);
                rows.push(i);
                last = Some((i, j));
            }
        }
        // Drop cancelled entries off the diagonal.
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((&i, &j), &v) in rows.iter().zip(&cols).zip(&values) {
            if i == j || v.abs() >= 1e-300 {
                row_ptr[i + 1] += 1;
                keep_cols.push(j);
                keep_vals.push(v);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseSymmetric { n, row_ptr, cols: keep_cols, values: keep_vals })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries (lower triangle).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(p) => self.values[range.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Iterates over stored `(row, col, value)` with `row >= col`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.cols[p], self.values[p]))
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.n, self.n);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Largest entry of `|self - other|`; the matrices must have the same size.
    pub fn max_abs_diff(&self, other: &SparseSymmetric) -> f64 {
        let mut d = 0.0_f64;
        for (i, j, v) in self.entries() {
            d = d.max((v - other.get(i, j)).abs());
        }
        for (i, j, v) in other.entries() {
            d = d.max((v - self.get(i, j)).abs());
        }
        d
    }

    pub fn matvec(&self, exec: Execution, x: &[f64]) -> Vec<f64> {
        let full = FullRows::new(self);
        let mut y = vec![0.0; self.n];
        full.apply(exec, x, &mut y);
        y
    }
}

/// Both triangles in compressed rows, so each row of a product can be
/// computed independently.
struct FullRows {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl FullRows {
    fn new(a: &SparseSymmetric) -> FullRows {
        let n = a.n;
        let mut count = vec![0usize; n + 1];
        for (i, j, _) in a.entries() {
            count[i + 1] += 1;
            if i != j {
                count[j + 1] += 1;
            }
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let row_ptr = count.clone();
        let mut next = count;
        let nnz = row_ptr[n];
        let mut cols = vec![0; nnz];
        let mut values = vec![0.0; nnz];
        // Row i receives its lower entries (cols ascending), then the upper
        // ones from later rows (also ascending), so rows end up sorted.
        for (i, j, v) in a.entries() {
            cols[next[i]] = j;
            values[next[i]] = v;
            next[i] += 1;
        }
        for (i, j, v) in a.entries() {
            if i != j {
                cols[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        FullRows { row_ptr, cols, values }
    }

    fn apply(&self, exec: Execution, x: &[f64], y: &mut [f64]) {
        par::fill(exec, y, |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(|p| self.values[p] * x[self.cols[p]]).sum()
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual `‖b - Ax‖ / ‖b‖` to reach.
    pub tol: f64,
    /// Iteration cap; `None` means `max(1000, 10 n)`.
    pub max_iter: Option<usize>,
    pub exec: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-12, max_iter: None, exec: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutput {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final true relative residual.
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients.
pub fn solve_spd(a: &SparseSymmetric, b: &[f64], opts: &SolverOptions) -> Result<SolveOutput> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::InternalConsistency(format!("right-hand side has length {}, expected {n}", b.len())));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::NotSpd(format!("diagonal entry {i} is {}", diag[i])));
    }
    let exec = opts.exec;
    let max_iter = opts.max_iter.unwrap_or((10 * n).max(1000));
    let b_norm = par::dot(exec, b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(SolveOutput { x: vec![0.0; n], iterations: 0, residual: 0.0 });
    }
    let full = FullRows::new(a);
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let mut x = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut iterations = 0;
    let mut residual = 1.0;
    // A restart recomputes the true residual, guarding against drift of the
    // recursive one at tight tolerances.
    for _restart in 0..4 {
        par::fill(exec, &mut z, |i| inv_diag[i] * r[i]);
        p.copy_from_slice(&z);
        let mut rz = par::dot(exec, &r, &z);
        while iterations < max_iter {
            if par::dot(exec, &r, &r).sqrt() <= opts.tol * b_norm {
                break;
            }
            full.apply(exec, &p, &mut q);
            let pq = par::dot(exec, &p, &q);
            if !(pq > 0.0) {
                return Err(Error::NotSpd(format!("non-positive curvature pᵀAp = {pq:e}")));
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            par::fill(exec, &mut z, |i| inv_diag[i] * r[i]);
            let rz_new = par::dot(exec, &r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            iterations += 1;
        }
        full.apply(exec, &x, &mut ax);
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        residual = par::dot(exec, &r, &r).sqrt() / b_norm;
        if residual <= opts.tol || iterations >= max_iter {
            break;
        }
    }
    if residual > opts.tol {
        return Err(Error::NonConvergence { iterations, residual });
    }
    Ok(SolveOutput { x, iterations, residual })
}

/// Applies each cell's flux operator to its local values
/// `(p_K, p_σ1, ..., p_σk)`, with edge values looked up by global edge index.
pub fn recover_fluxes(
    mesh: &Mesh,
    operators: &[Mat],
    cell_values: &[f64],
    edge_values: &[f64],
    exec: Execution,
) -> Vec<Vec<f64>> {
    par::map_range(exec, mesh.num_cells(), |c| {
        let cell = mesh.cell(c);
        let mut local = Vector::zeros(cell.num_faces() + 1);
        local[0] = cell_values[c];
        for (i, f) in cell.faces.iter().enumerate() {
            local[i + 1] = edge_values[f.edge];
        }
        (&operators[c] * local).iter().copied().collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(a: &SparseSymmetric, b: &[f64]) -> SolveOutput {
        solve_spd(a, b, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn one_by_one() {
        let a = SparseSymmetric::from_triplets(1, vec![(0, 0, 2.0)]).unwrap();
        assert_eq!(solve(&a, &[4.0]).x, vec![2.0]);
    }

    #[test]
    fn identity_in_one_iteration() {
        let a = SparseSymmetric::from_triplets(5, (0..5).map(|i| (i, i, 1.0)).collect()).unwrap();
        let b = [1.0, -2.0, 3.5, 0.25, 7.0];
        let out = solve(&a, &b);
        assert_eq!(out.x, b.to_vec());
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = SparseSymmetric::from_triplets(2, vec![(0, 0, 4.0), (1, 0, 1.0), (1, 1, 3.0)]).unwrap();
        let out = solve(&a, &[1.0, 2.0]);
        assert!((out.x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((out.x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SparseSymmetric::from_triplets(2, vec![(0, 1, 1.0)]).is_err());
        let a = SparseSymmetric::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 0.0)]).unwrap();
        assert!(matches!(solve_spd(&a, &[1.0, 1.0], &SolverOptions::default()), Err(Error::NotSpd(_))));
        let a = SparseSymmetric::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert!(solve_spd(&a, &[1.0, 0.0], &SolverOptions::default()).is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
        }
        let a = SparseSymmetric::from_triplets(n, t).unwrap();
        let opts = SolverOptions { max_iter: Some(3), ..SolverOptions::default() };
        assert!(matches!(solve_spd(&a, &vec![1.0; n], &opts), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let a = SparseSymmetric::from_triplets(2, vec![(1, 0, 1.0), (0, 0, 1.0), (1, 0, -1.0), (0, 0, 2.0), (1, 1, 1.0)])
            .unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let n = 3000;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + (i % 7) as f64));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i > 40 {
                t.push((i, i - 40, -0.5));
            }
        }
        let a = SparseSymmetric::from_triplets(n, t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let seq = solve_spd(&a, &b, &SolverOptions { exec: Execution::Sequential, ..Default::default() }).unwrap();
        let par = solve_spd(&a, &b, &SolverOptions { exec: Execution::Parallel, ..Default::default() }).unwrap();
        assert_eq!(seq, par);
        let dense = a.to_dense();
        let y = a.matvec(Execution::Sequential, &b);
        let yd = &dense * Vector::from_vec(b.clone());
        for (u, v) in y.iter().zip(yd.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
