//! `hmmf`: batch front-end for solves, equivalence reports, special-case
//! checks and convergence studies.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hmmf::config::{
    parse_points, parse_stabilization_file, read_config, PointsSpec, RunConfig, SourceSpec, StabilizationSource, TensorSpec,
};
use hmmf::local::DiffusionField;
use hmmf::mesh::{build_cartesian, build_perturbed_quads, read_mesh, Domain, Mesh};
use hmmf::par::Execution;
use hmmf::post::{
    errors_and_orders, lift_flux, mfe_inner_product, two_point_verify, ManufacturedCase, TwoPointCheck,
};
use hmmf::scheme::{assemble, equivalence_report, DiscreteSolution, GlobalSystem, PointPolicy, Problem, SchemeConfig};
use hmmf::solve::SolverOptions;
use hmmf::{Error, Tensor, Vec2};

const EQUIVALENCE_TOL: f64 = 1e-9;
const TWO_POINT_TOL: f64 = 1e-11;
const LIFT_TOL: f64 = 1e-12;
const INNER_PRODUCT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Solve,
    Equivalence,
    TwoPoint,
    Lifting,
    Convergence,
}

#[derive(Debug, Parser)]
#[command(name = "hmmf", about = "Hybrid / mimetic / mixed diffusion schemes on polygonal meshes")]
struct Args {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh file, or `gen:nx,ny[,amp,seed]` for a (perturbed) grid of the unit square.
    #[arg(long)]
    mesh: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "solve")]
    command: Command,
    /// Relative residual tolerance of the linear solver.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

/// A failed run: exit code and message.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Failure {
        Failure { code, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::NonConvergence { .. } | Error::NotSpd(_) => 2,
            Error::InvalidGeometry(_) | Error::Parse { .. } | Error::IllConditionedCell { .. } => 3,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn mesh_failure(e: Error) -> Failure {
    Failure::new(3, e.to_string())
}

struct GenSpec {
    nx: usize,
    ny: usize,
    amplitude: f64,
    seed: u64,
}

fn parse_gen(spec: &str) -> Run<GenSpec> {
    let bad = || Failure::new(3, format!("bad mesh generator `gen:{spec}`, expected gen:nx,ny[,amp,seed]"));
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 2 && parts.len() != 4 {
        return Err(bad());
    }
    let nx = parts[0].parse().map_err(|_| bad())?;
    let ny = parts[1].parse().map_err(|_| bad())?;
    let (amplitude, seed) = if parts.len() == 4 {
        (parts[2].parse().map_err(|_| bad())?, parts[3].parse().map_err(|_| bad())?)
    } else {
        (0.0, 1)
    };
    Ok(GenSpec { nx, ny, amplitude, seed })
}

fn generate(nx: usize, ny: usize, amplitude: f64, seed: u64) -> Run<Mesh> {
    let mesh = if amplitude == 0.0 {
        build_cartesian(nx, ny, Domain::unit())
    } else {
        build_perturbed_quads(nx, ny, Domain::unit(), amplitude, seed)
    };
    mesh.map_err(mesh_failure)
}

fn load_mesh(spec: Option<&str>) -> Run<Mesh> {
    let spec = spec.ok_or_else(|| Failure::new(1, "--mesh is required for this command"))?;
    match spec.strip_prefix("gen:") {
        Some(g) => {
            let g = parse_gen(g)?;
            generate(g.nx, g.ny, g.amplitude, g.seed)
        }
        None => read_mesh(spec).map_err(mesh_failure),
    }
}

/// Tensor, source and boundary data resolved from the configuration.
struct Data {
    tensor: Box<dyn Fn(Vec2) -> Tensor + Sync>,
    source: Box<dyn Fn(Vec2) -> f64 + Sync>,
    dirichlet: Option<Box<dyn Fn(Vec2) -> f64 + Sync>>,
}

fn case_of(cfg: &RunConfig) -> Run<Option<ManufacturedCase>> {
    let SourceSpec::Case(name) = &cfg.source else {
        return Ok(None);
    };
    let case = ManufacturedCase::by_name(name)?;
    Ok(Some(match &cfg.tensor {
        Some(TensorSpec::Constant(t)) => case.with_tensor(*t),
        _ => case,
    }))
}

fn data(cfg: &RunConfig) -> Run<Data> {
    let case = case_of(cfg)?;
    let tensor: Box<dyn Fn(Vec2) -> Tensor + Sync> = match (&cfg.tensor, &case) {
        (Some(TensorSpec::Constant(t)), _) => {
            let t = *t;
            Box::new(move |_| t)
        }
        (Some(TensorSpec::Named(n)), _) => Box::new(ManufacturedCase::named_tensor(n)?),
        (None, Some(c)) => {
            let c = c.clone();
            Box::new(move |x| c.tensor(x))
        }
        (None, None) => Box::new(|_| Tensor::identity()),
    };
    let (source, dirichlet): (Box<dyn Fn(Vec2) -> f64 + Sync>, _) = match (&cfg.source, case) {
        (SourceSpec::Zero, _) => (Box::new(|_| 0.0), None),
        (SourceSpec::One, _) => (Box::new(|_| 1.0), None),
        (SourceSpec::Case(_), Some(c)) => {
            let g: Option<Box<dyn Fn(Vec2) -> f64 + Sync>> = if c.needs_dirichlet() {
                let c = c.clone();
                Some(Box::new(move |x| c.exact(x)))
            } else {
                None
            };
            (Box::new(move |x| c.source(x)), g)
        }
        (SourceSpec::Case(n), None) => return Err(Failure::new(1, format!("unknown source `{n}`"))),
    };
    Ok(Data { tensor, source, dirichlet })
}

fn scheme_config(cfg: &RunConfig, mesh: &Mesh) -> Run<SchemeConfig> {
    let stabilization = match &cfg.stabilization {
        StabilizationSource::Spec(s) => s.clone(),
        StabilizationSource::MatrixFile(p) => {
            let text = read_text("stabilization.matrix-file", p)?;
            parse_stabilization_file(&text, mesh)?
        }
    };
    let points = match &cfg.points {
        PointsSpec::Centroid => PointPolicy::Centroid,
        PointsSpec::SuperAdmissible => PointPolicy::SuperAdmissible,
        PointsSpec::File(p) => PointPolicy::Custom(parse_points(&read_text("points", p)?)?),
    };
    Ok(SchemeConfig {
        formulation: cfg.formulation,
        stabilization,
        points,
        condense: cfg.condense.clone(),
        exec: Execution::Parallel,
    })
}

fn read_text(key: &str, path: &Path) -> Run<String> {
    fs::read_to_string(path).map_err(|e| Failure::new(1, format!("configuration error for key `{key}`: {}: {e}", path.display())))
}

fn write_out(dir: &Path, name: &str, text: &str) -> Run<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::new(1, format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display())))
}

struct Solved {
    system: GlobalSystem,
    field: DiffusionField,
    solution: DiscreteSolution,
}

fn solve_problem(cfg: &RunConfig, mesh: &Mesh, opts: &SolverOptions) -> Run<Solved> {
    let d = data(cfg)?;
    let field = DiffusionField::from_fn(mesh, &d.tensor)?;
    let scheme = scheme_config(cfg, mesh)?;
    let mut problem = Problem::new(&d.source);
    if let Some(g) = &d.dirichlet {
        problem = problem.with_dirichlet(g);
    }
    let system = assemble(mesh, &field, &scheme, &problem)?;
    let solution = system.solve(opts)?;
    Ok(Solved { system, field, solution })
}

fn solution_csv(system: &GlobalSystem, s: &DiscreteSolution) -> String {
    let mesh = &system.mesh;
    let mut out = String::from("kind,id,a,b,value\n");
    for (c, cell) in mesh.cells().iter().enumerate() {
        let _ = writeln!(out, "cell,{c},{:.15e},{:.15e},{:.15e}", cell.point.x, cell.point.y, s.cell_values[c]);
    }
    for (e, edge) in mesh.edges().iter().enumerate() {
        let _ = writeln!(out, "edge,{e},{:.15e},{:.15e},{:.15e}", edge.midpoint.x, edge.midpoint.y, s.edge_values[e]);
    }
    for (c, cell) in mesh.cells().iter().enumerate() {
        for (i, f) in cell.faces.iter().enumerate() {
            let _ = writeln!(out, "flux,{c},{i},{},{:.15e}", f.edge, s.fluxes[c][i]);
        }
    }
    out
}

fn summary(system: &GlobalSystem, s: &DiscreteSolution) -> String {
    let mesh = &system.mesh;
    let condensed = system.condensed.iter().filter(|c| c.is_some()).count();
    let mut out = String::new();
    let _ = writeln!(out, "formulation = {}", system.formulation);
    let _ = writeln!(out, "cells = {}", mesh.num_cells());
    let _ = writeln!(out, "edges = {}", mesh.num_edges());
    let _ = writeln!(out, "boundary_edges = {}", mesh.boundary_edges().len());
    let _ = writeln!(out, "condensed_edges = {condensed}");
    let _ = writeln!(out, "unknowns = {}", system.num_unknowns());
    let _ = writeln!(out, "edge_unknowns = {}", system.num_edge_unknowns());
    let _ = writeln!(out, "iterations = {}", s.iterations);
    let _ = writeln!(out, "residual = {:.6e}", s.residual);
    let _ = writeln!(out, "balance_defect = {:.6e}", s.balance_defect(system));
    let _ = writeln!(out, "conservativity_defect = {:.6e}", s.conservativity_defect(system));
    out
}

fn cmd_solve(args: &Args, cfg: &RunConfig, opts: &SolverOptions) -> Run<String> {
    let mesh = load_mesh(args.mesh.as_deref())?;
    let solved = solve_problem(cfg, &mesh, opts)?;
    write_out(&args.out, "solution.csv", &solution_csv(&solved.system, &solved.solution))?;
    let text = summary(&solved.system, &solved.solution);
    write_out(&args.out, "summary.txt", &text)?;
    Ok(format!("solved: {} unknowns, {} iterations", solved.system.num_unknowns(), solved.solution.iterations))
}

fn cmd_equivalence(args: &Args, cfg: &RunConfig, opts: &SolverOptions) -> Run<String> {
    let mesh = load_mesh(args.mesh.as_deref())?;
    let d = data(cfg)?;
    let field = DiffusionField::from_fn(&mesh, &d.tensor)?;
    let scheme = scheme_config(cfg, &mesh)?;
    let mut problem = Problem::new(&d.source);
    if let Some(g) = &d.dirichlet {
        problem = problem.with_dirichlet(g);
    }
    let report = equivalence_report(&mesh, &field, &scheme, &problem, opts, cfg.convert)?;
    let mut out = String::new();
    let _ = writeln!(out, "converted = {}", report.converted);
    let Some(dev) = report.deviations else {
        let _ = writeln!(out, "note = stabilization is outside equivalence family, no deviation computed");
        write_out(&args.out, "equivalence.txt", &out)?;
        return Ok("outside equivalence family".into());
    };
    let _ = writeln!(out, "matrix = {:.6e}", dev.matrix);
    let _ = writeln!(out, "rhs = {:.6e}", dev.rhs);
    let _ = writeln!(out, "pressure = {:.6e}", dev.pressure);
    let _ = writeln!(out, "flux = {:.6e}", dev.flux);
    let _ = writeln!(out, "max = {:.6e}", dev.max());
    write_out(&args.out, "equivalence.txt", &out)?;
    if dev.max() > EQUIVALENCE_TOL {
        return Err(Failure::new(4, format!("deviation {:.3e} exceeds {EQUIVALENCE_TOL:e}", dev.max())));
    }
    Ok(format!("formulations agree, max deviation {:.3e}", dev.max()))
}

fn cmd_two_point(args: &Args, cfg: &RunConfig, opts: &SolverOptions) -> Run<String> {
    let mesh = load_mesh(args.mesh.as_deref())?;
    let solved = solve_problem(cfg, &mesh, opts)?;
    match two_point_verify(&solved.system, &solved.field, &solved.solution) {
        TwoPointCheck::Inapplicable(why) => {
            write_out(&args.out, "two_point.txt", &format!("inapplicable = {why}\n"))?;
            Err(Failure::new(1, format!("two-point check inapplicable: {why}")))
        }
        TwoPointCheck::Checked { harmonic, local } => {
            let scale = solved.solution.max_abs_flux().max(1.0);
            write_out(
                &args.out,
                "two_point.txt",
                &format!("harmonic = {harmonic:.6e}\nlocal = {local:.6e}\nflux_scale = {scale:.6e}\n"),
            )?;
            let worst = harmonic.max(local);
            if worst > TWO_POINT_TOL * scale {
                return Err(Failure::new(4, format!("two-point deviation {worst:.3e}")));
            }
            Ok(format!("two-point fluxes agree, max deviation {worst:.3e}"))
        }
    }
}

fn cmd_lifting(args: &Args, cfg: &RunConfig, opts: &SolverOptions) -> Run<String> {
    let mesh = load_mesh(args.mesh.as_deref())?;
    let solved = solve_problem(cfg, &mesh, opts)?;
    let mesh = &solved.system.mesh;
    let (mut trace, mut divergence, mut inner) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (c, cell) in mesh.cells().iter().enumerate() {
        let lambda = solved.field.tensor(c);
        let f = &solved.solution.fluxes[c];
        let scale = f.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let lift = lift_flux(cell, lambda, f)?;
        let mut total_div = 0.0;
        for (i, face) in cell.faces.iter().enumerate() {
            let [_, a, b] = cell.cone(i);
            for x in [a, b, (a + b) * 0.5] {
                trace = trace.max((lift.on_cone(i, x).dot(&face.normal) - f[i]).abs() / scale);
            }
            let [p, a, b] = cell.cone(i);
            let cone_area = 0.5 * ((a - p).perp(&(b - p))).abs();
            total_div += lift.divergence(i) * cone_area;
        }
        let boundary: f64 = cell.faces.iter().zip(f).map(|(face, v)| face.length * v).sum();
        divergence = divergence.max((total_div - boundary).abs() / (scale * cell.diameter));
        let ip = mfe_inner_product(cell, lambda, f, f)?;
        inner = inner.max((ip.quadrature - ip.closed_form).abs() / ip.closed_form.abs().max(f64::MIN_POSITIVE));
    }
    write_out(
        &args.out,
        "lifting.txt",
        &format!("normal_trace = {trace:.6e}\ndivergence = {divergence:.6e}\ninner_product = {inner:.6e}\n"),
    )?;
    if trace.max(divergence) > LIFT_TOL || inner > INNER_PRODUCT_TOL {
        return Err(Failure::new(4, "lifting identities violated"));
    }
    Ok(format!("lifting identities hold on {} cells", mesh.num_cells()))
}

fn cmd_convergence(args: &Args, cfg: &RunConfig, opts: &SolverOptions) -> Run<String> {
    let case = case_of(cfg)?
        .ok_or_else(|| Failure::new(1, "configuration error for key `source`: convergence needs a manufactured case"))?;
    let (amplitude, seed) = match args.mesh.as_deref().and_then(|m| m.strip_prefix("gen:")) {
        Some(g) => {
            let g = parse_gen(g)?;
            (g.amplitude, g.seed)
        }
        None => (cfg.family_amplitude, cfg.family_seed),
    };
    let family = cfg.family.iter().map(|&n| generate(n, n, amplitude, seed)).collect::<Run<Vec<Mesh>>>()?;
    let scheme = scheme_config(cfg, &family[0])?;
    let report = errors_and_orders(&case, &family, &scheme, opts)?;
    write_out(&args.out, "convergence.csv", &report.to_csv())?;
    let min_p = cfg.order_p_min.unwrap_or(if amplitude == 0.0 { 1.8 } else { 1.7 });
    let min_f = cfg.order_f_min.unwrap_or(0.9);
    if !report.meets(min_p, min_f) {
        return Err(Failure::new(5, format!("observed orders below thresholds p >= {min_p}, F >= {min_f}")));
    }
    Ok(format!("orders meet thresholds p >= {min_p}, F >= {min_f}"))
}

fn configure_threads() -> Run<()> {
    let Ok(v) = std::env::var("HMMF_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| Failure::new(1, format!("HMMF_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(Failure::new(1, "HMMF_THREADS must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::new(1, format!("cannot configure threads: {e}")))
}

fn run(args: &Args) -> Run<String> {
    configure_threads()?;
    let cfg = match &args.config {
        Some(p) => read_config(p)?,
        None => RunConfig::default(),
    };
    if !args.tol.is_finite() || args.tol <= 0.0 {
        return Err(Failure::new(1, "--tol must be positive"));
    }
    let opts = SolverOptions { tol: args.tol, ..SolverOptions::default() };
    match args.command {
        Command::Solve => cmd_solve(args, &cfg, &opts),
        Command::Equivalence => cmd_equivalence(args, &cfg, &opts),
        Command::TwoPoint => cmd_two_point(args, &cfg, &opts),
        Command::Lifting => cmd_lifting(args, &cfg, &opts),
        Command::Convergence => cmd_convergence(args, &cfg, &opts),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
