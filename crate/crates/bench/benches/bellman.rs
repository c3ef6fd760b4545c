use criterion::{criterion_group, criterion_main, Criterion};
use usageval_bench::{desk_grid, desk_model, desk_scenarios};
use usageval_core::{simulate_chronicle, solve_bellman_dhd, solve_bellman_hd};

fn recursions(c: &mut Criterion) {
    let model = desk_model();
    let (set, chronicles) = desk_scenarios();
    let tl = set.timeline();
    let grid = desk_grid(11);
    let mut group = c.benchmark_group("desk recursion, 11 points");
    group.sample_size(10);
    group.bench_function("hd", |b| {
        b.iter(|| solve_bellman_hd(&model, &set, &grid, &tl).unwrap())
    });
    group.bench_function("dhd", |b| {
        b.iter(|| solve_bellman_dhd(&model, &set, &grid, &tl).unwrap())
    });
    group.finish();

    let table = solve_bellman_dhd(&model, &set, &grid, &tl).unwrap();
    c.bench_function("simulate one chronicle", |b| {
        b.iter(|| {
            simulate_chronicle(&model, &table, &set, &chronicles[0], model.initial_stock).unwrap()
        })
    });
}

criterion_group!(benches, recursions);
criterion_main!(benches);
