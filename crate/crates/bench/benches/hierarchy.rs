use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polyrelax::relax::build;
use polyrelax::{solve, Hierarchy, SolverConfig};
use polyrelax_bench::{load, CONVEX_QP, MAXCUT_K3, SQUARE};

fn hierarchy(c: &mut Criterion) {
    let config = SolverConfig::default();
    let cases = [
        ("square", SQUARE, Hierarchy::Lp, 3, 0),
        ("square", SQUARE, Hierarchy::Bsos, 3, 1),
        ("qp", CONVEX_QP, Hierarchy::Bsos, 2, 1),
        ("qp", CONVEX_QP, Hierarchy::Putinar, 2, 0),
        ("maxcut", MAXCUT_K3, Hierarchy::Rlt01, 3, 0),
        ("maxcut", MAXCUT_K3, Hierarchy::Bsos01, 2, 1),
    ];
    let mut group = c.benchmark_group("hierarchy");
    group.sample_size(10);
    for (name, text, h, d, k) in cases {
        let inst = load(text);
        let program = build(&inst, h, d, k).unwrap();
        group.bench_function(BenchmarkId::new(format!("{name}/{h}"), format!("d{d}k{k}")), |b| {
            b.iter(|| solve(&program, &config))
        });
    }
    group.finish();
}

criterion_group!(benches, hierarchy);
criterion_main!(benches);
