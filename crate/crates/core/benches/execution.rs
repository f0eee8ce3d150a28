//! Sequential vs rayon execution of assembly and solve.
//!
//! Without the `parallel` feature both variants run the sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hmmf::local::Variant;
use hmmf::mesh::{build_perturbed_quads, Domain};
use hmmf::par::Execution;
use hmmf::post::ManufacturedCase;
use hmmf::scheme::{assemble, Formulation, Problem, SchemeConfig, StabilizationSpec};
use hmmf::solve::SolverOptions;

fn config(exec: Execution) -> SchemeConfig {
    SchemeConfig {
        formulation: Formulation::Mixed,
        stabilization: StabilizationSpec::Random { seed: 3, variant: Variant::MimeticU },
        exec,
        ..SchemeConfig::default()
    }
}

fn bench(c: &mut Criterion) {
    let case = ManufacturedCase::case_b();
    let source = |x| case.source(x);
    let problem = Problem::new(&source);
    for n in [32, 96] {
        let mesh = build_perturbed_quads(n, n, Domain::unit(), 0.15, 7).unwrap();
        let field = case.field(&mesh).unwrap();

        let mut group = c.benchmark_group(format!("assemble/{n}x{n}"));
        group.sample_size(10);
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let cfg = config(exec);
            group.bench_function(BenchmarkId::from_parameter(name), |b| {
                b.iter(|| black_box(assemble(&mesh, &field, &cfg, &problem).unwrap()))
            });
        }
        group.finish();

        let mut group = c.benchmark_group(format!("solve/{n}x{n}"));
        group.sample_size(10);
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let system = assemble(&mesh, &field, &config(exec), &problem).unwrap();
            let opts = SolverOptions { exec, ..SolverOptions::default() };
            group.bench_function(BenchmarkId::from_parameter(name), |b| {
                b.iter(|| black_box(system.solve(&opts).unwrap()))
            });
        }
        group.finish();
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);
