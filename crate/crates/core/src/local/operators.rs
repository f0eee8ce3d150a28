use super::tensor_inverse;
use crate::dense::Mat;
use crate::mesh::Cell;
use crate::{Result, Tensor, Vec2};

/// `R`: row `i` is `|σ_i| (x̄_σi - x_K)ᵀ`.
pub fn matrix_r(cell: &Cell) -> Mat {
    let k = cell.num_faces();
    Mat::from_fn(k, 2, |i, j| {
        let f = &cell.faces[i];
        f.length * (f.midpoint - cell.point)[j]
    })
}

/// `N`: entry `(i, j)` is `(Λ_K)_j · n_σi`.
pub fn matrix_n(cell: &Cell, lambda: &Tensor) -> Mat {
    let k = cell.num_faces();
    Mat::from_fn(k, 2, |i, j| lambda.column(j).dot(&cell.faces[i].normal))
}

/// Discrete divergence `(1/|K|) Σ |σ| G_σ`.
pub fn divergence(cell: &Cell, g: &[f64]) -> f64 {
    cell.faces.iter().zip(g).map(|(f, v)| f.length * v).sum::<f64>() / cell.area
}

/// The `2×(k+1)` matrix of the hybrid discrete gradient
/// `∇_K p = (1/|K|) Σ |σ| (p_σ - p_K) n_σ`.
pub fn gradient_matrix(cell: &Cell) -> Mat {
    let k = cell.num_faces();
    let mut g = Mat::zeros(2, k + 1);
    for (i, f) in cell.faces.iter().enumerate() {
        for d in 0..2 {
            let v = f.length * f.normal[d] / cell.area;
            g[(d, i + 1)] = v;
            g[(d, 0)] -= v;
        }
    }
    g
}

/// The `k×(k+1)` matrix of `S_{K,σ}(p) = p_σ - p_K - ∇_K p · (x̄_σ - x_K)`.
pub fn residual_matrix(cell: &Cell) -> Mat {
    let k = cell.num_faces();
    let g = gradient_matrix(cell);
    let mut s = Mat::zeros(k, k + 1);
    for (i, f) in cell.faces.iter().enumerate() {
        let r = f.midpoint - cell.point;
        for c in 0..=k {
            s[(i, c)] = -(r.x * g[(0, c)] + r.y * g[(1, c)]);
        }
        s[(i, 0)] -= 1.0;
        s[(i, i + 1)] += 1.0;
    }
    s
}

/// The `k×(k+1)` matrix mapping local hybrid values to `(|σ|(p_K - p_σ))_σ`.
pub fn pressure_drop_matrix(cell: &Cell) -> Mat {
    let k = cell.num_faces();
    let mut e = Mat::zeros(k, k + 1);
    for (i, f) in cell.faces.iter().enumerate() {
        e[(i, 0)] = f.length;
        e[(i, i + 1)] = -f.length;
    }
    e
}

/// Hybrid discrete gradient of `p_loc = (p_K, p_σ...)`.
pub fn hybrid_gradient(cell: &Cell, p_loc: &[f64]) -> Vec2 {
    debug_assert_eq!(p_loc.len(), cell.num_faces() + 1);
    let pk = p_loc[0];
    cell.faces
        .iter()
        .zip(&p_loc[1..])
        .fold(Vec2::zeros(), |acc, (f, &ps)| acc + f.normal * (f.length * (ps - pk)))
        / cell.area
}

/// `S_{K,σ}(p)` for every face.
pub fn hybrid_residual(cell: &Cell, p_loc: &[f64]) -> Vec<f64> {
    let g = hybrid_gradient(cell, p_loc);
    cell.faces
        .iter()
        .zip(&p_loc[1..])
        .map(|(f, &ps)| ps - p_loc[0] - g.dot(&(f.midpoint - cell.point)))
        .collect()
}

/// Flux-based gradient `v_K(F)`: `|K| Λ_K v = -Σ |σ| F_σ (x̄_σ - x_K)`.
pub fn flux_gradient(cell: &Cell, lambda: &Tensor, fluxes: &[f64]) -> Result<Vec2> {
    let inv = tensor_inverse(lambda)?;
    let s = cell
        .faces
        .iter()
        .zip(fluxes)
        .fold(Vec2::zeros(), |acc, (f, &v)| acc + (f.midpoint - cell.point) * (f.length * v));
    Ok(-(inv * s) / cell.area)
}

/// The `2×k` matrix of `F ↦ v_K(F)`.
pub fn velocity_matrix(cell: &Cell, lambda: &Tensor) -> Result<Mat> {
    let inv = tensor_inverse(lambda)?;
    let r = matrix_r(cell);
    let inv = Mat::from_fn(2, 2, |i, j| inv[(i, j)]);
    Ok(-(inv * r.transpose()) / cell.area)
}

/// `T_{K,σ}(F) = F_σ + Λ_K v_K(F) · n_σ`.
pub fn t_operator(cell: &Cell, lambda: &Tensor, fluxes: &[f64]) -> Result<Vec<f64>> {
    let lv = lambda * flux_gradient(cell, lambda, fluxes)?;
    Ok(cell.faces.iter().zip(fluxes).map(|(f, &v)| v + lv.dot(&f.normal)).collect())
}

/// The `k×k` matrix of [`t_operator`].
pub fn t_matrix(cell: &Cell, lambda: &Tensor) -> Result<Mat> {
    let k = cell.num_faces();
    let v = velocity_matrix(cell, lambda)?;
    let lam = Mat::from_fn(2, 2, |i, j| lambda[(i, j)]);
    let normals = Mat::from_fn(k, 2, |i, j| cell.faces[i].normal[j]);
    Ok(Mat::identity(k, k) + normals * lam * v)
}

/// `L_K(V)_σ = V_σ/|σ| - D_K V · (x̄_σ - x_K)` with `D_K V = (1/|K|) Σ V_σ n_σ`.
pub fn l_operator(cell: &Cell, v: &[f64]) -> Vec<f64> {
    let dv = cell
        .faces
        .iter()
        .zip(v)
        .fold(Vec2::zeros(), |acc, (f, &x)| acc + f.normal * x)
        / cell.area;
    cell.faces
        .iter()
        .zip(v)
        .map(|(f, &x)| x / f.length - dv.dot(&(f.midpoint - cell.point)))
        .collect()
}

/// The `k×k` matrix of [`l_operator`].
pub fn l_matrix(cell: &Cell) -> Mat {
    let k = cell.num_faces();
    let mut l = Mat::zeros(k, k);
    for (i, fi) in cell.faces.iter().enumerate() {
        let r = fi.midpoint - cell.point;
        for (j, fj) in cell.faces.iter().enumerate() {
            l[(i, j)] = -r.dot(&fj.normal) / cell.area;
        }
        l[(i, i)] += 1.0 / fi.length;
    }
    l
}

/// Residual of the strongly stabilized mixed relation
/// `p_σ - p_K - v_K(F)·(x̄_σ - x_K) + ν diam(K) F_σ` for every face.
pub fn strong_relation_residual(cell: &Cell, lambda: &Tensor, p_loc: &[f64], fluxes: &[f64], nu: f64) -> Result<Vec<f64>> {
    let v = flux_gradient(cell, lambda, fluxes)?;
    Ok(cell
        .faces
        .iter()
        .enumerate()
        .map(|(i, f)| p_loc[i + 1] - p_loc[0] - v.dot(&(f.midpoint - cell.point)) + nu * cell.diameter * fluxes[i])
        .collect())
}
