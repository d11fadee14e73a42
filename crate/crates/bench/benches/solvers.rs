use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sqbif_bench::{reference_mesh, reference_spec};
use sqbif_core::continuation::trace_branch;
use sqbif_core::discretization::{weak_jacobian, weak_residual, GridFunction, PLaplacian, Reaction};
use sqbif_core::eigen::first_eigenpair;
use sqbif_core::linalg::Tridiagonal;
use sqbif_core::solvers::{monotone_iteration_minimal, newton_solve};
use sqbif_core::{ContinuationConfig, SolveOptions};

fn assembly(c: &mut Criterion) {
    let spec = reference_spec();
    let mut g = c.benchmark_group("assembly");
    for n in [100, 400, 1600] {
        let mesh = reference_mesh(n);
        let u = GridFunction::from_fn(mesh.clone(), |x| x * (1.0 - x));
        let op = PLaplacian::new(spec.p);
        let src = Reaction::new(&spec, 2.0);
        g.bench_with_input(BenchmarkId::new("residual", n), &n, |b, _| {
            b.iter(|| weak_residual(&op, &mesh, black_box(&u.values), &src).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("jacobian", n), &n, |b, _| {
            b.iter(|| weak_jacobian(&op, &mesh, black_box(&u.values), &src).unwrap())
        });
        let mut t = Tridiagonal::zeros(n);
        for i in 0..n {
            t.diag[i] = 4.0;
            if i + 1 < n {
                t.upper[i] = -1.0;
                t.lower[i + 1] = -1.0;
            }
        }
        let rhs = vec![1.0; n];
        g.bench_with_input(BenchmarkId::new("tridiagonal_solve", n), &n, |b, _| {
            b.iter(|| t.solve(black_box(&rhs)).unwrap())
        });
    }
    g.finish();
}

fn solvers(c: &mut Criterion) {
    let spec = reference_spec();
    let mesh = reference_mesh(400);
    let opts = SolveOptions::default();
    c.bench_function("eigen_p2_n400", |b| b.iter(|| first_eigenpair(&mesh, black_box(2.0)).unwrap()));
    c.bench_function("eigen_p3_n400", |b| b.iter(|| first_eigenpair(&mesh, black_box(3.0)).unwrap()));
    c.bench_function("monotone_minimal_n400", |b| {
        b.iter(|| monotone_iteration_minimal(&mesh, black_box(2.0), &spec, &opts).unwrap())
    });
    let start = monotone_iteration_minimal(&mesh, 2.0, &spec, &opts).unwrap().solution;
    c.bench_function("newton_warm_n400", |b| {
        b.iter(|| newton_solve(black_box(&start), 2.2, &spec, &opts).unwrap())
    });
}

fn continuation(c: &mut Criterion) {
    let spec = reference_spec();
    let mesh = reference_mesh(400);
    let mut g = c.benchmark_group("continuation");
    g.sample_size(10);
    g.bench_function("trace_branch_n400", |b| {
        b.iter(|| {
            trace_branch(&spec, &mesh, &ContinuationConfig::default(), &SolveOptions::default()).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, assembly, solvers, continuation);
criterion_main!(benches);
