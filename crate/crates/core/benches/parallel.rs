//! Rayon pool vs a single worker on the parallel kernels.
//!
//! A one-thread pool measures the same code path run sequentially; build
//! with `--no-default-features` to bench the plain iterator fallback.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPool;

use nlok::functionals::{plane, CurveFields};
use nlok::onedim;
use nlok::sets::CurveMesh;
use nlok::{Params, StarShape2D};

fn pools() -> Vec<(String, ThreadPool)> {
    let all = rayon::current_num_threads();
    let mut out = vec![("1".to_string(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap())];
    if all > 1 {
        out.push((all.to_string(), rayon::ThreadPoolBuilder::new().num_threads(all).build().unwrap()));
    }
    out
}

fn planar(c: &mut Criterion) {
    let star = StarShape2D::from_modes([0.0, 0.0], 0.56, &[(3, 0.03, 0.0), (2, 0.01, 0.02)]).unwrap();
    let p = Params::new(2, 0.5, 0.5, 1e-3).unwrap();
    let mut g = c.benchmark_group("boundary_fields");
    g.sample_size(10);
    for m in [256, 512] {
        let mesh = CurveMesh::new(&star, m).unwrap();
        for (threads, pool) in pools() {
            g.bench_with_input(BenchmarkId::new(format!("threads={threads}"), m), &mesh, |b, mesh| {
                b.iter(|| pool.install(|| black_box(CurveFields::compute(mesh, &p, true))))
            });
        }
    }
    g.finish();

    let mut g = c.benchmark_group("frac_perimeter");
    g.sample_size(10);
    let mesh = CurveMesh::new(&star, 512).unwrap();
    for (threads, pool) in pools() {
        g.bench_function(format!("threads={threads}"), |b| {
            b.iter(|| pool.install(|| black_box(plane::frac_perimeter(&mesh, 0.5))))
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let p = Params::new(1, 0.75, 0.25, 1e-3).unwrap();
    let grid = onedim::geometric_grid(-3.0, -6.0, 0.25);
    let mut g = c.benchmark_group("epsilon_sweep");
    g.sample_size(10);
    for (threads, pool) in pools() {
        g.bench_function(format!("threads={threads}"), |b| {
            b.iter(|| pool.install(|| black_box(onedim::epsilon_sweep(&p, &grid, 1e-10).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, planar, sweep);
criterion_main!(benches);
