//! Global assembly of the hybridized system in the hybrid, mimetic and mixed
//! formulations.
//!
//! Unknowns are the cell values followed by the values on interior edges
//! that are neither on the boundary nor condensed, in increasing edge order.
//! Boundary edges carry Dirichlet data and condensed edges are replaced by a
//! barycentric combination of nearby cell values.

mod condense;
mod equivalence;
mod local;

pub use condense::{barycentric_weights, Condensation};
pub use equivalence::{equivalence_report, Deviations, EquivalenceReport};
pub use local::{local_system, LocalSystem};

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::Mat;
use crate::local::{consistency_m, DiffusionField, LocalStabilization, Preset, Variant};
use crate::mesh::{Cell, Mesh};
use crate::par::{self, Execution};
use crate::quadrature::{integrate_fan, TriangleRule};
use crate::sampling::random_spd;
use crate::solve::{recover_fluxes, solve_spd, SolverOptions, SparseSymmetric};
use crate::{Error, Result, Tensor, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    Hybrid,
    Mimetic,
    Mixed,
}

impl Formulation {
    pub const ALL: [Formulation; 3] = [Formulation::Hybrid, Formulation::Mimetic, Formulation::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::Hybrid => "hybrid",
            Formulation::Mimetic => "mimetic",
            Formulation::Mixed => "mixed",
        }
    }

    /// The stabilization parameterization native to this formulation.
    pub fn variant(self) -> Variant {
        match self {
            Formulation::Hybrid => Variant::HybridB,
            Formulation::Mimetic => Variant::MimeticU,
            Formulation::Mixed => Variant::MixedB,
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Formulation> {
        match s {
            "hybrid" => Ok(Formulation::Hybrid),
            "mimetic" => Ok(Formulation::Mimetic),
            "mixed" => Ok(Formulation::Mixed),
            _ => Err(Error::Parameter(format!("unknown formulation `{s}`"))),
        }
    }
}

/// Where the stabilization of each cell comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum StabilizationSpec {
    Preset(Preset),
    /// Random SPD matrices of the given kind, reproducible from `seed`
    /// independently of the evaluation order.
    Random { seed: u64, variant: Variant },
    PerCell(Vec<LocalStabilization>),
}

impl StabilizationSpec {
    pub fn resolve(&self, index: usize, cell: &Cell, lambda: &Tensor) -> Result<LocalStabilization> {
        match self {
            StabilizationSpec::Preset(p) => p.local(cell, lambda),
            StabilizationSpec::Random { seed, variant } => random_local(*seed, index, cell, lambda, *variant),
            StabilizationSpec::PerCell(list) => {
                let s = list
                    .get(index)
                    .ok_or_else(|| Error::Parameter(format!("no stabilization given for cell {index}")))?;
                s.validate(cell.num_faces())?;
                Ok(s.clone())
            }
        }
    }
}

/// Eigenvalues are drawn in `[0.5, 2]` times a scale matching the
/// consistent part of the same parameterization.
fn random_local(seed: u64, index: usize, cell: &Cell, lambda: &Tensor, variant: Variant) -> Result<LocalStabilization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let k = cell.num_faces();
    let (n, scale) = match variant {
        Variant::MimeticU => (k - 2, consistency_m(cell, lambda)?.trace() / k as f64),
        Variant::MixedB => (k, consistency_m(cell, lambda)?.trace() / k as f64),
        Variant::HybridB => (k, 0.5 * lambda.trace()),
    };
    let m = random_spd(&mut rng, n, 0.5, 2.0) * scale;
    Ok(LocalStabilization::from_matrix(variant, m))
}

/// Choice of the cell points `x_K`.
#[derive(Debug, Clone, PartialEq)]
pub enum PointPolicy {
    Centroid,
    Custom(Vec<Vec2>),
    /// Points whose segments to the edge midpoints are normal to the edges,
    /// where they exist; other cells keep their centroid.
    SuperAdmissible,
}

impl PointPolicy {
    pub fn apply(&self, mesh: &Mesh) -> Result<Mesh> {
        let points: Vec<Vec2> = match self {
            PointPolicy::Centroid => mesh.cells().iter().map(|c| c.centroid).collect(),
            PointPolicy::Custom(p) => {
                if p.len() != mesh.num_cells() {
                    return Err(Error::Parameter(format!(
                        "{} cell points given for {} cells",
                        p.len(),
                        mesh.num_cells()
                    )));
                }
                p.clone()
            }
            PointPolicy::SuperAdmissible => crate::post::super_admissible_points(mesh)
                .iter()
                .zip(mesh.cells())
                .map(|(p, c)| p.map_or(c.centroid, |s| s.point))
                .collect(),
        };
        mesh.with_points(&points)
    }
}

/// The set of condensed edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condense {
    None,
    /// Every interior edge; only cell unknowns remain.
    All,
    Edges(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub formulation: Formulation,
    pub stabilization: StabilizationSpec,
    pub points: PointPolicy,
    pub condense: Condense,
    pub exec: Execution,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            formulation: Formulation::Hybrid,
            stabilization: StabilizationSpec::Preset(Preset::HybridDiagonal(crate::local::Alpha::Constant(1.0))),
            points: PointPolicy::Centroid,
            condense: Condense::None,
            exec: Execution::default(),
        }
    }
}

pub type ScalarFn<'a> = &'a (dyn Fn(Vec2) -> f64 + Sync);

/// Source term and Dirichlet data (zero when absent).
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub source: ScalarFn<'a>,
    pub dirichlet: Option<ScalarFn<'a>>,
}

impl<'a> Problem<'a> {
    pub fn new(source: ScalarFn<'a>) -> Problem<'a> {
        Problem { source, dirichlet: None }
    }

    pub fn with_dirichlet(self, g: ScalarFn<'a>) -> Problem<'a> {
        Problem { dirichlet: Some(g), ..self }
    }
}

/// Assembled system plus everything needed to rebuild edge values and
/// fluxes from its solution.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub formulation: Formulation,
    /// The mesh with the cell points actually used.
    pub mesh: Mesh,
    pub matrix: SparseSymmetric,
    pub rhs: Vec<f64>,
    /// Unknown index of each edge, `None` for boundary and condensed edges.
    pub edge_unknowns: Vec<Option<usize>>,
    pub condensed: Vec<Option<Condensation>>,
    /// Dirichlet value of each boundary edge (zero elsewhere).
    pub boundary_values: Vec<f64>,
    pub locals: Vec<LocalSystem>,
    /// `∫_K f` per cell.
    pub source_integrals: Vec<f64>,
    pub exec: Execution,
}

/// Cell and edge values with the recovered fluxes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub cell_values: Vec<f64>,
    /// One value per mesh edge: solved, condensed or Dirichlet.
    pub edge_values: Vec<f64>,
    /// `fluxes[K][i]` is `F_{K,σ}` for the `i`-th face of `K`.
    pub fluxes: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residual: f64,
}

fn at_cell(c: usize, e: Error) -> Error {
    match e {
        Error::IllConditionedCell { msg, .. } => Error::IllConditionedCell { cell: c, msg },
        Error::Parameter(m) => Error::Parameter(format!("cell {c}: {m}")),
        Error::NotSpd(m) => Error::NotSpd(format!("cell {c}: {m}")),
        Error::Ellipticity(m) => Error::Ellipticity(format!("cell {c}: {m}")),
        other => other,
    }
}

/// One entry of the local-to-global map: a sum of weighted unknowns plus
/// a constant.
struct Projection {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

/// Assembles the system for `config.formulation` after applying the
/// point policy.
pub fn assemble(mesh: &Mesh, field: &DiffusionField, config: &SchemeConfig, problem: &Problem) -> Result<GlobalSystem> {
    let mesh = config.points.apply(mesh)?;
    assemble_prepared(mesh, field, config, problem)
}

pub fn assemble_hybrid(mesh: &Mesh, field: &DiffusionField, config: &SchemeConfig, problem: &Problem) -> Result<GlobalSystem> {
    assemble(mesh, field, &SchemeConfig { formulation: Formulation::Hybrid, ..config.clone() }, problem)
}

pub fn assemble_mimetic(mesh: &Mesh, field: &DiffusionField, config: &SchemeConfig, problem: &Problem) -> Result<GlobalSystem> {
    assemble(mesh, field, &SchemeConfig { formulation: Formulation::Mimetic, ..config.clone() }, problem)
}

pub fn assemble_mixed(mesh: &Mesh, field: &DiffusionField, config: &SchemeConfig, problem: &Problem) -> Result<GlobalSystem> {
    assemble(mesh, field, &SchemeConfig { formulation: Formulation::Mixed, ..config.clone() }, problem)
}

/// Edges to condense, validated and sorted.
fn condensed_edges(mesh: &Mesh, condense: &Condense) -> Result<Vec<usize>> {
    match condense {
        Condense::None => Ok(Vec::new()),
        Condense::All => Ok(mesh.interior_edges().collect()),
        Condense::Edges(list) => {
            let mut list = list.clone();
            list.sort_unstable();
            list.dedup();
            if let Some(&e) = list.iter().find(|&&e| e >= mesh.num_edges() || mesh.edge(e).is_boundary()) {
                return Err(Error::Parameter(format!("edge {e} is not an interior edge and cannot be condensed")));
            }
            Ok(list)
        }
    }
}

pub(crate) fn assemble_prepared(
    mesh: Mesh,
    field: &DiffusionField,
    config: &SchemeConfig,
    problem: &Problem,
) -> Result<GlobalSystem> {
    if field.tensors().len() != mesh.num_cells() {
        return Err(Error::Parameter(format!(
            "diffusion field has {} tensors for {} cells",
            field.tensors().len(),
            mesh.num_cells()
        )));
    }
    let exec = config.exec;
    let n_cells = mesh.num_cells();
    let n_edges = mesh.num_edges();

    let mut condensed: Vec<Option<Condensation>> = vec![None; n_edges];
    let to_condense = condensed_edges(&mesh, &config.condense)?;
    let weights = par::map_range(exec, to_condense.len(), |i| barycentric_weights(&mesh, to_condense[i]));
    for (e, w) in to_condense.iter().zip(weights) {
        condensed[*e] = Some(w?);
    }

    let mut edge_unknowns = vec![None; n_edges];
    let mut next = n_cells;
    for e in 0..n_edges {
        if !mesh.edge(e).is_boundary() && condensed[e].is_none() {
            edge_unknowns[e] = Some(next);
            next += 1;
        }
    }
    let n = next;

    let mut boundary_values = vec![0.0; n_edges];
    if let Some(g) = problem.dirichlet {
        for &e in mesh.boundary_edges() {
            boundary_values[e] = g(mesh.edge(e).midpoint);
        }
    }

    let source = problem.source;
    let per_cell = par::map_range(exec, n_cells, |c| -> Result<_> {
        let cell = mesh.cell(c);
        let lambda = field.tensor(c);
        let stab = config.stabilization.resolve(c, cell, lambda).map_err(|e| at_cell(c, e))?;
        let local = local_system(cell, lambda, &stab, config.formulation).map_err(|e| at_cell(c, e))?;
        let mut proj = Vec::with_capacity(cell.num_faces() + 1);
        proj.push(Projection { terms: vec![(c, 1.0)], constant: 0.0 });
        for f in &cell.faces {
            let p = if let Some(u) = edge_unknowns[f.edge] {
                Projection { terms: vec![(u, 1.0)], constant: 0.0 }
            } else if let Some(cond) = &condensed[f.edge] {
                Projection { terms: cond.cells.iter().copied().zip(cond.weights.iter().copied()).collect(), constant: 0.0 }
            } else {
                Projection { terms: Vec::new(), constant: boundary_values[f.edge] }
            };
            proj.push(p);
        }
        let a = &local.matrix;
        let m = proj.len();
        let mut triplets = Vec::new();
        let mut rhs = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let aij = a[(i, j)];
                for &(gi, ci) in &proj[i].terms {
                    for &(gj, cj) in &proj[j].terms {
                        if gi >= gj {
                            triplets.push((gi, gj, ci * aij * cj));
                        }
                    }
                    if proj[j].constant != 0.0 {
                        rhs.push((gi, -ci * aij * proj[j].constant));
                    }
                }
            }
        }
        let integral = integrate_fan(cell.point, &cell.vertices, TriangleRule::Degree5, source);
        rhs.push((c, integral));
        Ok((local, triplets, rhs, integral))
    });

    let mut locals = Vec::with_capacity(n_cells);
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    let mut source_integrals = Vec::with_capacity(n_cells);
    for item in per_cell {
        let (local, t, r, integral) = item?;
        locals.push(local);
        triplets.extend(t);
        for (i, v) in r {
            rhs[i] += v;
        }
        source_integrals.push(integral);
    }
    let matrix = SparseSymmetric::from_triplets(n, triplets)?;
    Ok(GlobalSystem {
        formulation: config.formulation,
        mesh,
        matrix,
        rhs,
        edge_unknowns,
        condensed,
        boundary_values,
        locals,
        source_integrals,
        exec,
    })
}

impl GlobalSystem {
    pub fn num_unknowns(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_edge_unknowns(&self) -> usize {
        self.rhs.len() - self.mesh.num_cells()
    }

    pub fn is_condensed(&self) -> bool {
        self.condensed.iter().any(Option::is_some)
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<DiscreteSolution> {
        let out = solve_spd(&self.matrix, &self.rhs, opts)?;
        let mut sol = self.recover(&out.x);
        sol.iterations = out.iterations;
        sol.residual = out.residual;
        Ok(sol)
    }

    /// Expands an unknown vector into cell values, all edge values and
    /// fluxes.
    pub fn recover(&self, x: &[f64]) -> DiscreteSolution {
        let n_cells = self.mesh.num_cells();
        let cell_values = x[..n_cells].to_vec();
        let edge_values: Vec<f64> = (0..self.mesh.num_edges())
            .map(|e| {
                if let Some(u) = self.edge_unknowns[e] {
                    x[u]
                } else if let Some(c) = &self.condensed[e] {
                    c.cells.iter().zip(&c.weights).map(|(&l, w)| w * cell_values[l]).sum()
                } else {
                    self.boundary_values[e]
                }
            })
            .collect();
        let ops: Vec<Mat> = self.locals.iter().map(|l| l.flux.clone()).collect();
        let fluxes = recover_fluxes(&self.mesh, &ops, &cell_values, &edge_values, self.exec);
        DiscreteSolution { cell_values, edge_values, fluxes, iterations: 0, residual: 0.0 }
    }
}

impl DiscreteSolution {
    /// Largest `|F_{K,σ} + F_{L,σ}|` over interior edges that are not
    /// condensed.
    pub fn conservativity_defect(&self, system: &GlobalSystem) -> f64 {
        let mesh = &system.mesh;
        mesh.interior_edges()
            .filter(|&e| system.condensed[e].is_none())
            .map(|e| {
                let s = &mesh.edge(e).sides;
                (self.fluxes[s[0].cell][s[0].local] + self.fluxes[s[1].cell][s[1].local]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|Σ_σ |σ| F_{K,σ} - ∫_K f|` over cells.
    pub fn balance_defect(&self, system: &GlobalSystem) -> f64 {
        system
            .mesh
            .cells()
            .iter()
            .zip(&self.fluxes)
            .zip(&system.source_integrals)
            .map(|((cell, f), integral)| {
                let out: f64 = cell.faces.iter().zip(f).map(|(fc, v)| fc.length * v).sum();
                (out - integral).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_flux(&self) -> f64 {
        self.fluxes.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}
