//! Per-cell operators of the unified family.
//!
//! Notation follows the usual mimetic/finite-volume conventions: for a cell
//! `K` with `k` faces, `R` (`k×2`) has rows `|σ|(x̄_σ - x_K)ᵀ`, `N` (`k×2`)
//! has entries `(Λ_K)_j · n_σ`, `C` and `D` are orthonormal bases of
//! `Im(N)^⊥` and `Im(R)^⊥`. The mimetic inner product matrix is
//! `M = RΛ⁻¹Rᵀ/|K| + C U Cᵀ` and its inverse is
//! `W = NΛ⁻¹Nᵀ/|K| + D Ũ Dᵀ`.
//!
//! Local hybrid unknowns are ordered `(p_K, p_σ1, ..., p_σk)`.

mod matrices;
mod operators;
mod stability;
mod stabilization;
mod weight;

pub use matrices::{
    consistency_m, consistency_w, matrix_c, matrix_d, matrix_m, matrix_w, verify_complement,
};
pub use operators::{
    divergence, flux_gradient, gradient_matrix, hybrid_gradient, hybrid_residual, l_matrix, l_operator,
    matrix_n, matrix_r, pressure_drop_matrix, residual_matrix, strong_relation_residual, t_matrix, t_operator,
    velocity_matrix,
};
pub use stability::{stability_bounds, stability_bounds_area, StabilityBounds};
pub use stabilization::{
    convert_stabilization, dual_mimetic_parameter, pullback_inner_product, Alpha, LocalStabilization, Preset,
    Variant,
};
pub use weight::{weight_function, WeightFunction};

use crate::mesh::{Cell, Mesh};
use crate::quadrature::{integrate_fan, TriangleRule};
use crate::{Error, Result, Tensor, Vec2};

/// Checks that `Λ` is symmetric positive definite and returns its inverse.
pub fn tensor_inverse(lambda: &Tensor) -> Result<Tensor> {
    let scale = lambda.abs().max();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Ellipticity(format!("tensor {lambda:?} is zero or not finite")));
    }
    if (lambda[(0, 1)] - lambda[(1, 0)]).abs() > 1e-12 * scale {
        return Err(Error::Ellipticity(format!("tensor {lambda:?} is not symmetric")));
    }
    if min_eigenvalue(lambda) <= 1e-14 * scale {
        return Err(Error::Ellipticity(format!("tensor {lambda:?} is not positive definite")));
    }
    lambda
        .try_inverse()
        .ok_or_else(|| Error::Ellipticity(format!("tensor {lambda:?} is singular")))
}

fn min_eigenvalue(t: &Tensor) -> f64 {
    let a = t[(0, 0)];
    let d = t[(1, 1)];
    let b = 0.5 * (t[(0, 1)] + t[(1, 0)]);
    0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
}

/// Piecewise-constant diffusion tensor, one `Λ_K` per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionField {
    tensors: Vec<Tensor>,
    zeta: f64,
}

impl DiffusionField {
    pub fn from_tensors(tensors: Vec<Tensor>) -> Result<DiffusionField> {
        let mut zeta = f64::INFINITY;
        for (c, t) in tensors.iter().enumerate() {
            tensor_inverse(t).map_err(|e| Error::Ellipticity(format!("cell {c}: {e}")))?;
            zeta = zeta.min(min_eigenvalue(t));
        }
        Ok(DiffusionField { tensors, zeta })
    }

    pub fn constant(mesh: &Mesh, lambda: Tensor) -> Result<DiffusionField> {
        DiffusionField::from_tensors(vec![lambda; mesh.num_cells()])
    }

    /// Cell means of `f`, by the degree-5 rule on the cone fan.
    pub fn from_fn<F>(mesh: &Mesh, f: F) -> Result<DiffusionField>
    where
        F: Fn(Vec2) -> Tensor,
    {
        let tensors = mesh.cells().iter().map(|c| cell_mean_tensor(c, &f)).collect();
        DiffusionField::from_tensors(tensors)
    }

    pub fn tensor(&self, cell: usize) -> &Tensor {
        &self.tensors[cell]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    /// Smallest eigenvalue over all cells.
    pub fn ellipticity(&self) -> f64 {
        self.zeta
    }

    /// `Some(λ_K)` per cell when every tensor is a multiple of the identity.
    pub fn isotropic_values(&self) -> Option<Vec<f64>> {
        self.tensors
            .iter()
            .map(|t| {
                let s = t.abs().max();
                let iso = t[(0, 1)].abs() <= 1e-14 * s
                    && t[(1, 0)].abs() <= 1e-14 * s
                    && (t[(0, 0)] - t[(1, 1)]).abs() <= 1e-14 * s;
                iso.then_some(t[(0, 0)])
            })
            .collect()
    }
}

fn cell_mean_tensor<F: Fn(Vec2) -> Tensor>(cell: &Cell, f: &F) -> Tensor {
    let mut m = Tensor::zeros();
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = integrate_fan(cell.point, &cell.vertices, TriangleRule::Degree5, |x| f(x)[(i, j)]) / cell.area;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian, Domain};

    #[test]
    fn tensor_checks() {
        assert!(tensor_inverse(&Tensor::new(2.0, 0.0, 0.0, 3.0)).is_ok());
        assert!(tensor_inverse(&Tensor::new(1.0, 2.0, 2.0, 1.0)).is_err());
        assert!(tensor_inverse(&Tensor::new(1.0, 0.5, 0.0, 1.0)).is_err());
        assert!(tensor_inverse(&Tensor::zeros()).is_err());
    }

    #[test]
    fn field_means_and_isotropy() {
        let m = build_cartesian(2, 1, Domain::unit()).unwrap();
        let field = DiffusionField::from_fn(&m, |x| if x.x < 0.5 { Tensor::identity() } else { Tensor::identity() * 10.0 })
            .unwrap();
        assert_eq!(field.isotropic_values().unwrap(), vec![1.0, 10.0]);
        assert_eq!(field.ellipticity(), 1.0);
        let aniso = DiffusionField::constant(&m, Tensor::new(1.0, 0.0, 0.0, 2.0)).unwrap();
        assert!(aniso.isotropic_values().is_none());
    }
}
