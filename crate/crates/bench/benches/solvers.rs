use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pgw::{
    solve_pot_linear, solve_v1, solve_v2, tensor_product_factored, CostDecomposition, FwConfig, LpOptions,
};
use pgw_bench::{product_plan, random_cost, uniform_problem};

fn tensor_product(c: &mut Criterion) {
    let mut group = c.benchmark_group("tensor_product");
    for n in [50, 100, 200] {
        let problem = uniform_problem(n, n + 100, 2, 3, 1.0, 0);
        let decomp = CostDecomposition::for_problem(&problem).unwrap();
        let plan = product_plan(&problem);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| tensor_product_factored(&decomp, &plan).unwrap())
        });
    }
    group.finish();
}

fn partial_lp(c: &mut Criterion) {
    let mut group = c.benchmark_group("partial_lp");
    for n in [50, 100, 200] {
        let m = n + 100;
        let g = random_cost(n, m, 1);
        let problem = uniform_problem(n, m, 2, 3, 1.0, 1);
        let (p, q) = (problem.source.weights(), problem.target.weights());
        for reduction in [false, true] {
            let id = BenchmarkId::new(if reduction { "reduced" } else { "full" }, n);
            group.bench_function(id, |b| {
                b.iter(|| solve_pot_linear(g.view(), p, q, reduction, &LpOptions::default()).unwrap())
            });
        }
    }
    group.finish();
}

fn frank_wolfe(c: &mut Criterion) {
    let mut group = c.benchmark_group("frank_wolfe");
    group.sample_size(10);
    let config = FwConfig { max_iters: 20, ..FwConfig::default() };
    for n in [20, 50] {
        let problem = uniform_problem(n, n + 100, 2, 3, 1.0, 2);
        group.bench_with_input(BenchmarkId::new("v1", n), &n, |b, _| b.iter(|| solve_v1(&problem, &config, None).unwrap()));
        group.bench_with_input(BenchmarkId::new("v2", n), &n, |b, _| b.iter(|| solve_v2(&problem, &config, None).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, tensor_product, partial_lp, frank_wolfe);
criterion_main!(benches);
