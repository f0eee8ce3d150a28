use crate::local::DiffusionField;
use crate::scheme::{DiscreteSolution, GlobalSystem};

/// Outcome of comparing recovered fluxes with the two-point formulas.
#[derive(Debug, Clone, PartialEq)]
pub enum TwoPointCheck {
    Inapplicable(String),
    Checked {
        /// Largest `|F_{K,σ} - λ_Kλ_L(p_K - p_L)/(d_{K,σ}λ_L + d_{L,σ}λ_K)|`
        /// over interior edges.
        harmonic: f64,
        /// Largest `|F_{K,σ} - (λ_K/d_{K,σ})(p_K - p_σ)|` over all faces.
        local: f64,
    },
}

/// Checks the fluxes of a solved system against the two-point formulas.
///
/// Requires an isotropic tensor, cell points with `x̄_σ - x_K` normal to
/// every edge, and no condensation. The stabilization is not inspected:
/// the formulas hold for `hybrid-diagonal(λ_K)` (the `two-point` preset).
pub fn two_point_verify(system: &GlobalSystem, field: &DiffusionField, solution: &DiscreteSolution) -> TwoPointCheck {
    let Some(lambda) = field.isotropic_values() else {
        return TwoPointCheck::Inapplicable("the diffusion tensor is not isotropic".into());
    };
    let mesh = &system.mesh;
    for (c, cell) in mesh.cells().iter().enumerate() {
        for f in &cell.faces {
            let offset = f.midpoint - cell.point;
            if (offset - f.normal * f.dist).norm() > 1e-10 * cell.diameter {
                return TwoPointCheck::Inapplicable(format!("cell {c} point is not super-admissible"));
            }
        }
    }
    if system.is_condensed() {
        return TwoPointCheck::Inapplicable("the system is condensed".into());
    }
    let mut local = 0.0_f64;
    for (c, cell) in mesh.cells().iter().enumerate() {
        for (i, f) in cell.faces.iter().enumerate() {
            let expect = lambda[c] / f.dist * (solution.cell_values[c] - solution.edge_values[f.edge]);
            local = local.max((solution.fluxes[c][i] - expect).abs());
        }
    }
    let mut harmonic = 0.0_f64;
    for e in mesh.interior_edges() {
        let s = &mesh.edge(e).sides;
        let (k, l) = (s[0].cell, s[1].cell);
        let dk = mesh.cell(k).faces[s[0].local].dist;
        let dl = mesh.cell(l).faces[s[1].local].dist;
        let tau = lambda[k] * lambda[l] / (dk * lambda[l] + dl * lambda[k]);
        let expect = tau * (solution.cell_values[k] - solution.cell_values[l]);
        harmonic = harmonic.max((solution.fluxes[k][s[0].local] - expect).abs());
    }
    TwoPointCheck::Checked { harmonic, local }
}
