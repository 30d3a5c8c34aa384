use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pnstokes::dynamics::{assemble_rhs, ForcingSpec, Integrator, Modulation};
use pnstokes::spectral::random_solenoidal;
use pnstokes::{RheologyParams, TorusGrid, VectorField};

fn field(d: usize, n: usize, seed: u64) -> VectorField {
    let grid = TorusGrid::new(d, n).unwrap();
    random_solenoidal(&grid, seed, 1.0, 0.1, None).unwrap()
}

fn transforms(c: &mut Criterion) {
    let mut g = c.benchmark_group("transforms");
    for (d, n) in [(2, 64), (2, 128), (3, 32)] {
        let v = field(d, n, 1);
        let s = v.to_grid();
        g.bench_with_input(BenchmarkId::new("to_grid", format!("{d}d{n}")), &v, |b, v| {
            b.iter(|| v.to_grid())
        });
        g.bench_with_input(BenchmarkId::new("from_samples", format!("{d}d{n}")), &s, |b, s| {
            b.iter(|| VectorField::from_samples(s).unwrap())
        });
    }
    g.finish();
}

fn rhs(c: &mut Criterion) {
    let params = RheologyParams::new(5.0 / 3.0, 1e-3).unwrap();
    let mut g = c.benchmark_group("assemble_rhs");
    for (d, n) in [(2, 64), (3, 16)] {
        let v = field(d, n, 2);
        let f = field(d, n, 3);
        g.bench_function(format!("{d}d{n}"), |b| b.iter(|| assemble_rhs(&v, &f, &params).unwrap()));
    }
    g.finish();
}

fn step(c: &mut Criterion) {
    let params = RheologyParams::new(5.0 / 3.0, 1e-3).unwrap();
    let mut g = c.benchmark_group("step");
    for (d, n) in [(2, 32), (2, 64), (3, 16)] {
        let v = field(d, n, 4);
        let forcing = ForcingSpec::new(field(d, n, 5), Modulation::Constant, 1.0).unwrap();
        let mut integ = Integrator::new(v.grid().clone(), params, &forcing).unwrap();
        g.bench_function(format!("{d}d{n}"), |b| b.iter(|| integ.step(&v, 0.0, 1e-3).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, transforms, rhs, step);
criterion_main!(benches);
