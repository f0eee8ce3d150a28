use crate::local::{flux_gradient, hybrid_gradient, hybrid_residual, t_operator, tensor_inverse};
use crate::mesh::Cell;
use crate::quadrature::{integrate_triangle, TriangleRule};
use crate::{Error, Result, Tensor, Vec2};

/// Piecewise-affine field `F̂ = -Λ_K v_K + T_σ (x - x_K)/d_{K,σ}` on the
/// cones of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedFlux {
    cell: Cell,
    /// The constant part `-Λ_K v_K`.
    pub constant: Vec2,
    /// `T_{K,σ}` per face.
    pub t: Vec<f64>,
}

impl LiftedFlux {
    /// Value on cone `i`.
    pub fn on_cone(&self, i: usize, x: Vec2) -> Vec2 {
        self.constant + (x - self.cell.point) * (self.t[i] / self.cell.faces[i].dist)
    }

    pub fn eval(&self, x: Vec2) -> Result<Vec2> {
        let i = self.cell.locate(x, 1e-12).ok_or_else(|| {
            Error::Domain(format!("({}, {}) is not inside the cell", x.x, x.y))
        })?;
        Ok(self.on_cone(i, x))
    }

    /// Divergence on cone `i`, `2 T_σ / d_{K,σ}`.
    pub fn divergence(&self, i: usize) -> f64 {
        2.0 * self.t[i] / self.cell.faces[i].dist
    }

    pub fn cell(&self) -> &Cell {
        &self.cell
    }
}

pub fn lift_flux(cell: &Cell, lambda: &Tensor, fluxes: &[f64]) -> Result<LiftedFlux> {
    let v = flux_gradient(cell, lambda, fluxes)?;
    let t = t_operator(cell, lambda, fluxes)?;
    Ok(LiftedFlux { cell: cell.clone(), constant: -(lambda * v), t })
}

/// `∫_K Λ⁻¹ F̂·Ĝ` evaluated by exact cone quadrature and by the closed
/// form `|K| v(F)·Λ v(G) + Σ γ_σ T_σ(F) T_σ(G)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfeInnerProduct {
    pub quadrature: f64,
    pub closed_form: f64,
}

pub fn mfe_inner_product(cell: &Cell, lambda: &Tensor, f: &[f64], g: &[f64]) -> Result<MfeInnerProduct> {
    let inv = tensor_inverse(lambda)?;
    let lf = lift_flux(cell, lambda, f)?;
    let lg = lift_flux(cell, lambda, g)?;
    let mut quadrature = 0.0;
    let mut stab = 0.0;
    for i in 0..cell.num_faces() {
        let [a, b, c] = cell.cone(i);
        quadrature += integrate_triangle(a, b, c, TriangleRule::Degree2, |x| (inv * lf.on_cone(i, x)).dot(&lg.on_cone(i, x)));
        let d = cell.faces[i].dist;
        let gamma = integrate_triangle(a, b, c, TriangleRule::Degree2, |x| {
            let y = (x - cell.point) / d;
            (inv * y).dot(&y)
        });
        stab += gamma * lf.t[i] * lg.t[i];
    }
    let vf = flux_gradient(cell, lambda, f)?;
    let vg = flux_gradient(cell, lambda, g)?;
    Ok(MfeInnerProduct { quadrature, closed_form: cell.area * vf.dot(&(lambda * vg)) + stab })
}

/// Per-cone gradient `∇_K p + (β/d_{K,σ}) S_{K,σ} n_{K,σ}` of the
/// nonconforming reconstruction.
pub fn broken_gradient(cell: &Cell, p_loc: &[f64], beta: f64) -> Vec<Vec2> {
    let g = hybrid_gradient(cell, p_loc);
    let s = hybrid_residual(cell, p_loc);
    cell.faces.iter().zip(&s).map(|(f, si)| g + f.normal * (beta * si / f.dist)).collect()
}

/// Value of the reconstruction `p_K + ∇̂p̂ · (x - x_K)` on the cone
/// containing `x`.
pub fn broken_value(cell: &Cell, p_loc: &[f64], beta: f64, x: Vec2) -> Result<f64> {
    let i = cell
        .locate(x, 1e-12)
        .ok_or_else(|| Error::Domain(format!("({}, {}) is not inside the cell", x.x, x.y)))?;
    let grads = broken_gradient(cell, p_loc, beta);
    Ok(p_loc[0] + grads[i].dot(&(x - cell.point)))
}
