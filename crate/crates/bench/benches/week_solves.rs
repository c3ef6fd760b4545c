use criterion::{black_box, criterion_group, criterion_main, Criterion};
use usageval_bench::{desk_model, desk_scenarios};
use usageval_core::instances::{random_instance, InstanceLimits};
use usageval_core::{brute_force_week, solve_week_dhd, solve_week_hd, InformationStructure};

fn desk_week(c: &mut Criterion) {
    let model = desk_model();
    let (set, _) = desk_scenarios();
    let blocks = set.week(4);
    let ctg = model.final_cost.clone();
    c.bench_function("hd week, desk case", |b| {
        b.iter(|| solve_week_hd(black_box(7.0), &blocks[0], &ctg, &model).unwrap())
    });
    c.bench_function("dhd week, desk case, 5 scenarios", |b| {
        b.iter(|| solve_week_dhd(black_box(7.0), blocks, &ctg, &model).unwrap())
    });
}

fn against_brute_force(c: &mut Criterion) {
    let inst = random_instance(17, InstanceLimits::default());
    let mut group = c.benchmark_group("toy dhd week");
    group.bench_function("branch and bound", |b| {
        b.iter(|| solve_week_dhd(inst.x, &inst.blocks, &inst.ctg, &inst.model).unwrap())
    });
    group.bench_function("brute force", |b| {
        b.iter(|| {
            brute_force_week(
                inst.x,
                &inst.blocks,
                &inst.ctg,
                &inst.model,
                InformationStructure::Dhd,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, desk_week, against_brute_force);
criterion_main!(benches);
