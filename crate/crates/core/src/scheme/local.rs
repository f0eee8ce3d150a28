use crate::dense::{numerical_rank, spd_inverse, Mat, RANK_TOL};
use crate::local::{
    convert_stabilization, gradient_matrix, matrix_m, pressure_drop_matrix, residual_matrix, t_matrix,
    velocity_matrix, LocalStabilization, Variant,
};
use crate::mesh::Cell;
use crate::{Error, Result, Tensor};

use super::Formulation;

/// Local hybridized system of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSystem {
    /// `(k+1)×(k+1)` matrix on `(p_K, p_σ1, ..., p_σk)`.
    pub matrix: Mat,
    /// `k×(k+1)` map from local values to the fluxes `F_{K,σ}`.
    pub flux: Mat,
}

fn lambda_mat(lambda: &Tensor) -> Mat {
    Mat::from_fn(2, 2, |i, j| lambda[(i, j)])
}

/// Builds the local system of `cell` in the given formulation. The
/// stabilization is converted to the formulation's own parameterization
/// first when needed.
pub fn local_system(
    cell: &Cell,
    lambda: &Tensor,
    stab: &LocalStabilization,
    formulation: Formulation,
) -> Result<LocalSystem> {
    let target = match formulation {
        Formulation::Hybrid => Variant::HybridB,
        Formulation::Mimetic => Variant::MimeticU,
        Formulation::Mixed => Variant::MixedB,
    };
    let stab = match stab {
        LocalStabilization::MixedStrong { .. } if formulation == Formulation::Mixed => stab.clone(),
        LocalStabilization::MixedStrong { .. } => {
            return Err(Error::Parameter("mixed-strong stabilization requires the mixed formulation".into()))
        }
        s if s.variant() == Some(target) => {
            s.validate(cell.num_faces())?;
            s.clone()
        }
        s => convert_stabilization(cell, lambda, s, target)?,
    };
    match (&stab, formulation) {
        (LocalStabilization::HybridB(b), Formulation::Hybrid) => Ok(hybrid(cell, lambda, b)),
        (LocalStabilization::MimeticU(u), Formulation::Mimetic) => {
            let m = matrix_m(cell, lambda, u)?;
            flux_form(cell, &m)
        }
        (LocalStabilization::MixedB(b), Formulation::Mixed) => {
            let t = t_matrix(cell, lambda)?;
            let m = mixed_consistency(cell, lambda)? + t.transpose() * b * t;
            flux_form(cell, &m)
        }
        (LocalStabilization::MixedStrong { nu }, Formulation::Mixed) => {
            let mut m = mixed_consistency(cell, lambda)?;
            for (i, f) in cell.faces.iter().enumerate() {
                m[(i, i)] += nu * cell.diameter * f.length;
            }
            flux_form(cell, &m)
        }
        _ => unreachable!("stabilization converted to the formulation's variant"),
    }
}

/// `|K| Vᵀ Λ V` with `V` the matrix of `F ↦ v_K(F)`.
fn mixed_consistency(cell: &Cell, lambda: &Tensor) -> Result<Mat> {
    let v = velocity_matrix(cell, lambda)?;
    Ok(v.transpose() * lambda_mat(lambda) * v * cell.area)
}

/// Flux-based formulations: `M F = E p` gives `F = M⁻¹ E p` and the local
/// matrix `Eᵀ M⁻¹ E`.
fn flux_form(cell: &Cell, m: &Mat) -> Result<LocalSystem> {
    if numerical_rank(m, RANK_TOL) < m.nrows() {
        return Err(Error::NotSpd("local flux inner product is singular".into()));
    }
    let w = spd_inverse(m).ok_or_else(|| Error::NotSpd("local flux inner product is not positive definite".into()))?;
    let e = pressure_drop_matrix(cell);
    let flux = &w * &e;
    let matrix = e.transpose() * &flux;
    Ok(LocalSystem { matrix: crate::dense::symmetrize(&matrix), flux })
}

/// `|K| GᵀΛG + SᵀBS`; fluxes follow from testing with `q_K = 1`,
/// `q_σ = 0` and `q_σ' = 1` on the other faces.
fn hybrid(cell: &Cell, lambda: &Tensor, b: &Mat) -> LocalSystem {
    let g = gradient_matrix(cell);
    let s = residual_matrix(cell);
    let matrix = crate::dense::symmetrize(&(g.transpose() * lambda_mat(lambda) * &g * cell.area + s.transpose() * b * &s));
    let k = cell.num_faces();
    let mut flux = Mat::zeros(k, k + 1);
    for (i, f) in cell.faces.iter().enumerate() {
        for col in 0..=k {
            let row_sum: f64 = (0..=k).filter(|&r| r != i + 1).map(|r| matrix[(r, col)]).sum();
            flux[(i, col)] = row_sum / f.length;
        }
    }
    LocalSystem { matrix, flux }
}
