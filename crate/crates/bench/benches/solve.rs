use criterion::{criterion_group, criterion_main, Criterion};
use linepack_core::baseline::{alternating_projection_multistart, AltProjConfig};
use linepack_core::{solve, SolverConfig};

fn small_solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for (d, n) in [(2, 4), (3, 9)] {
        let cfg = SolverConfig::new(d, n).unwrap().restarts(1).seed(7);
        group.bench_function(format!("trstmi/{d}x{n}"), |b| b.iter(|| solve(&cfg, Some(1)).unwrap()));
    }
    let alt = AltProjConfig::new(3, 9);
    group.bench_function("altproj/3x9", |b| {
        b.iter(|| alternating_projection_multistart(3, 9, &alt, 1, 7, Some(1)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, small_solves);
criterion_main!(benches);
