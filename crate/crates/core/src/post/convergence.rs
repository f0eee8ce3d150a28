use std::fmt::Write;

use super::ManufacturedCase;
use crate::mesh::Mesh;
use crate::scheme::{assemble, DiscreteSolution, GlobalSystem, Problem, SchemeConfig};
use crate::solve::SolverOptions;
use crate::{Error, Result};

/// Errors at or below this level are treated as exact reproduction.
const EXACT: f64 = 1e-11;

/// Observed order between two consecutive meshes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Value(f64),
    /// Both errors are at round-off level.
    Exact,
}

impl Order {
    fn between(e0: f64, e1: f64, h0: f64, h1: f64) -> Order {
        if e0 <= EXACT && e1 <= EXACT {
            Order::Exact
        } else {
            Order::Value((e0 / e1).ln() / (h0 / h1).ln())
        }
    }

    /// Whether the order reaches `min`; exact reproduction always does.
    pub fn at_least(self, min: f64) -> bool {
        match self {
            Order::Exact => true,
            Order::Value(v) => v >= min,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// Largest cell diameter.
    pub h: f64,
    /// Mesh regularity.
    pub theta: f64,
    pub err_p: f64,
    pub err_f: f64,
    /// `None` on the first mesh.
    pub order_p: Option<Order>,
    pub order_f: Option<Order>,
    pub unknowns: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub case: String,
    pub condensed: bool,
    pub rows: Vec<ConvergenceRow>,
}

fn fmt_order(o: Option<Order>) -> String {
    match o {
        None => String::new(),
        Some(Order::Exact) => "exact".into(),
        Some(Order::Value(v)) => format!("{v:.6}"),
    }
}

impl ConvergenceReport {
    /// CSV with a metadata comment line, then
    /// `h,theta,err_p,err_F,order_p,order_F`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# case={} condensed={}", self.case, self.condensed).unwrap();
        writeln!(s, "h,theta,err_p,err_F,order_p,order_F").unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:.12e},{:.12e},{:.12e},{:.12e},{},{}",
                r.h,
                r.theta,
                r.err_p,
                r.err_f,
                fmt_order(r.order_p),
                fmt_order(r.order_f)
            )
            .unwrap();
        }
        s
    }

    pub fn orders_p(&self) -> Vec<Order> {
        self.rows.iter().filter_map(|r| r.order_p).collect()
    }

    pub fn orders_f(&self) -> Vec<Order> {
        self.rows.iter().filter_map(|r| r.order_f).collect()
    }

    /// Order over the last pair of meshes, the most asymptotic one.
    pub fn final_order_p(&self) -> Option<Order> {
        self.rows.last().and_then(|r| r.order_p)
    }

    pub fn final_order_f(&self) -> Option<Order> {
        self.rows.last().and_then(|r| r.order_f)
    }

    /// Whether every consecutive pair reaches the thresholds.
    pub fn meets(&self, min_p: f64, min_f: f64) -> bool {
        let (op, of) = (self.orders_p(), self.orders_f());
        !op.is_empty() && op.iter().all(|o| o.at_least(min_p)) && of.iter().all(|o| o.at_least(min_f))
    }
}

/// `(Σ_K |K| (p_K - p(x_K))²)^{1/2}` and
/// `(Σ_K Σ_σ |σ| d_{K,σ} (F_{K,σ} + Λ_K∇p(x̄_σ)·n)²)^{1/2}`.
pub fn discrete_errors(system: &GlobalSystem, solution: &DiscreteSolution, case: &ManufacturedCase) -> (f64, f64) {
    let mut ep = 0.0;
    let mut ef = 0.0;
    for (c, cell) in system.mesh.cells().iter().enumerate() {
        let d = solution.cell_values[c] - case.exact(cell.point);
        ep += cell.area * d * d;
        // The exact flux uses the tensor on the cell's side of the edge.
        let inside = |x: crate::Vec2| cell.point + (x - cell.point) * (1.0 - 1e-9);
        for (i, f) in cell.faces.iter().enumerate() {
            let y = inside(f.midpoint);
            let exact = -(case.tensor(y) * case.gradient(y)).dot(&f.normal);
            let d = solution.fluxes[c][i] - exact;
            ef += f.length * f.dist * d * d;
        }
    }
    (ep.sqrt(), ef.sqrt())
}

/// Solves `case` on each mesh of `family` and fits orders between
/// consecutive meshes.
pub fn errors_and_orders(
    case: &ManufacturedCase,
    family: &[Mesh],
    config: &SchemeConfig,
    opts: &SolverOptions,
) -> Result<ConvergenceReport> {
    if family.len() < 3 {
        return Err(Error::Report(format!("need >= 3 meshes, got {}", family.len())));
    }
    let sizes: Vec<f64> = family.iter().map(Mesh::size).collect();
    if sizes.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Report("mesh sizes must be strictly decreasing".into()));
    }
    let source = |x| case.source(x);
    let exact = |x| case.exact(x);
    let mut problem = Problem::new(&source);
    if case.needs_dirichlet() {
        problem = problem.with_dirichlet(&exact);
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(family.len());
    let mut condensed = false;
    for mesh in family {
        let field = case.field(mesh)?;
        let system = assemble(mesh, &field, config, &problem)?;
        condensed |= system.is_condensed();
        let solution = system.solve(opts)?;
        let (err_p, err_f) = discrete_errors(&system, &solution, case);
        let h = system.mesh.size();
        let (order_p, order_f) = match rows.last() {
            None => (None, None),
            Some(prev) => (
                Some(Order::between(prev.err_p, err_p, prev.h, h)),
                Some(Order::between(prev.err_f, err_f, prev.h, h)),
            ),
        };
        rows.push(ConvergenceRow {
            h,
            theta: system.mesh.regularity(),
            err_p,
            err_f,
            order_p,
            order_f,
            unknowns: system.num_unknowns(),
            iterations: solution.iterations,
        });
    }
    Ok(ConvergenceReport { case: case.name.clone(), condensed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::Preset;
    use crate::mesh::{build_cartesian, Domain};
    use crate::scheme::StabilizationSpec;
    use crate::Tensor;

    fn family(sizes: &[usize]) -> Vec<Mesh> {
        sizes.iter().map(|&n| build_cartesian(n, n, Domain::unit()).unwrap()).collect()
    }

    #[test]
    fn affine_case_is_exact() {
        let cfg = SchemeConfig { stabilization: StabilizationSpec::Preset(Preset::Mfe), ..SchemeConfig::default() };
        let report = errors_and_orders(
            &ManufacturedCase::affine(Tensor::new(2.0, 0.5, 0.5, 1.0)),
            &family(&[2, 4, 8]),
            &cfg,
            &SolverOptions { tol: 1e-14, ..Default::default() },
        )
        .unwrap();
        for r in &report.rows {
            assert!(r.err_p <= 1e-11 && r.err_f <= 1e-11, "{r:?}");
        }
        assert_eq!(report.final_order_p(), Some(Order::Exact));
        assert!(report.to_csv().contains(",exact,exact"));
    }

    #[test]
    fn family_checks() {
        let cfg = SchemeConfig::default();
        let case = ManufacturedCase::case_a();
        let opts = SolverOptions::default();
        let err = errors_and_orders(&case, &family(&[4]), &cfg, &opts).unwrap_err();
        assert!(err.to_string().contains("need >= 3 meshes"));
        assert!(errors_and_orders(&case, &family(&[4, 8, 8]), &cfg, &opts).is_err());
    }

    #[test]
    fn csv_layout() {
        let report = errors_and_orders(&ManufacturedCase::case_a(), &family(&[4, 8, 16]), &SchemeConfig::default(), &SolverOptions::default())
            .unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# case=case-a condensed=false");
        assert_eq!(lines[1], "h,theta,err_p,err_F,order_p,order_F");
        assert!(lines[2].ends_with(",,"));
        assert_eq!(lines.len(), 5);
    }
}
