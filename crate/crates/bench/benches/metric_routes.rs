use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nip_bench::{chain, grid, initial_basis};
use nip_core::evolution::propagate_basis;
use nip_core::metric::{metric_from_basis, solve_metric_ode};

fn metric_routes(c: &mut Criterion) {
    let grid = grid();
    let mut group = c.benchmark_group("metric_routes");
    group.sample_size(10);
    for n in [2, 4, 8, 16] {
        let g = chain(n);
        let basis = initial_basis(&g).unwrap();
        let theta0 = metric_from_basis(&basis.bra_vectors()).unwrap();
        group.bench_with_input(BenchmarkId::new("metric_ode", n), &n, |b, _| {
            b.iter(|| solve_metric_ode(&g, &theta0, &grid).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("propagated_basis", n), &n, |b, _| {
            b.iter(|| {
                propagate_basis(&g, &basis, &grid)
                    .unwrap()
                    .samples
                    .iter()
                    .map(|s| metric_from_basis(&s.bra_vectors()).unwrap())
                    .collect::<Vec<_>>()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, metric_routes);
criterion_main!(benches);
