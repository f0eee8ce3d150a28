use super::{assemble_prepared, DiscreteSolution, Formulation, GlobalSystem, Problem, SchemeConfig, StabilizationSpec};
use crate::dense::Mat;
use crate::local::{convert_stabilization, matrix_c, DiffusionField, LocalStabilization, Variant};
use crate::mesh::Mesh;
use crate::solve::SolverOptions;
use crate::Result;

/// Largest pairwise relative deviations between the three formulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviations {
    pub matrix: f64,
    pub rhs: f64,
    pub pressure: f64,
    pub flux: f64,
}

impl Deviations {
    pub fn max(&self) -> f64 {
        self.matrix.max(self.rhs).max(self.pressure).max(self.flux)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// Whether parameters were converted between formulations. When not,
    /// the source matrices are reused as they are (a negative control).
    pub converted: bool,
    /// `None` when the stabilization is outside the equivalence family.
    pub deviations: Option<Deviations>,
}

impl EquivalenceReport {
    pub fn outside_family(&self) -> bool {
        self.deviations.is_none()
    }
}

/// Reuses the source matrix for every parameterization without conversion:
/// `k×k` matrices serve as both `B^H` and `B^M` and are compressed to
/// `CᵀBC` for `U`; a `U` is expanded to `CUCᵀ + (I - CCᵀ)`.
fn mismatched(cell: &crate::mesh::Cell, lambda: &crate::Tensor, stab: &LocalStabilization, target: Variant) -> Result<LocalStabilization> {
    let c = matrix_c(cell, lambda)?;
    let k = cell.num_faces();
    let full = match stab {
        LocalStabilization::MimeticU(u) => {
            if target == Variant::MimeticU {
                return Ok(stab.clone());
            }
            &c * u * c.transpose() + Mat::identity(k, k) - &c * c.transpose()
        }
        LocalStabilization::HybridB(b) | LocalStabilization::MixedB(b) => b.clone(),
        LocalStabilization::MixedStrong { .. } => unreachable!("filtered by the caller"),
    };
    Ok(match target {
        Variant::MimeticU => LocalStabilization::MimeticU(crate::dense::symmetrize(&(c.transpose() * full * &c))),
        v => LocalStabilization::from_matrix(v, full),
    })
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Assembles and solves the scheme in all three formulations, with the
/// stabilization of `config` carried over to each one, and reports the
/// largest relative deviations.
pub fn equivalence_report(
    mesh: &Mesh,
    field: &DiffusionField,
    config: &SchemeConfig,
    problem: &Problem,
    opts: &SolverOptions,
    convert: bool,
) -> Result<EquivalenceReport> {
    let mesh = config.points.apply(mesh)?;
    let mut sources = Vec::with_capacity(mesh.num_cells());
    for (c, cell) in mesh.cells().iter().enumerate() {
        let s = config.stabilization.resolve(c, cell, field.tensor(c))?;
        if matches!(s, LocalStabilization::MixedStrong { .. }) {
            return Ok(EquivalenceReport { converted: convert, deviations: None });
        }
        sources.push(s);
    }

    let mut systems: Vec<GlobalSystem> = Vec::with_capacity(3);
    let mut solutions: Vec<DiscreteSolution> = Vec::with_capacity(3);
    for formulation in Formulation::ALL {
        let target = formulation.variant();
        let per_cell = mesh
            .cells()
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let lambda = field.tensor(c);
                if convert {
                    convert_stabilization(cell, lambda, &sources[c], target)
                } else {
                    mismatched(cell, lambda, &sources[c], target)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let cfg = SchemeConfig { formulation, stabilization: StabilizationSpec::PerCell(per_cell), ..config.clone() };
        let system = assemble_prepared(mesh.clone(), field, &cfg, problem)?;
        let solution = system.solve(opts)?;
        systems.push(system);
        solutions.push(solution);
    }

    let mut dev = Deviations { matrix: 0.0, rhs: 0.0, pressure: 0.0, flux: 0.0 };
    for i in 0..3 {
        for j in (i + 1)..3 {
            let (a, b) = (&systems[i], &systems[j]);
            dev.matrix = dev.matrix.max(relative(a.matrix.max_abs_diff(&b.matrix), a.matrix.max_abs()));
            dev.rhs = dev.rhs.max(relative(max_diff(&a.rhs, &b.rhs), max_abs(&a.rhs)));
            let (sa, sb) = (&solutions[i], &solutions[j]);
            let pa: Vec<f64> = sa.cell_values.iter().chain(&sa.edge_values).copied().collect();
            let pb: Vec<f64> = sb.cell_values.iter().chain(&sb.edge_values).copied().collect();
            dev.pressure = dev.pressure.max(relative(max_diff(&pa, &pb), max_abs(&pa)));
            let fa: Vec<f64> = sa.fluxes.iter().flatten().copied().collect();
            let fb: Vec<f64> = sb.fluxes.iter().flatten().copied().collect();
            dev.flux = dev.flux.max(relative(max_diff(&fa, &fb), max_abs(&fa)));
        }
    }
    Ok(EquivalenceReport { converted: convert, deviations: Some(dev) })
}
