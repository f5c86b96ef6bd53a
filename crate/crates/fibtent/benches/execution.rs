//! Parallel against sequential execution of the heaviest inner loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fibtent::lyapunov::pointwise_series;
use fibtent::measure::empirical_frequencies;
use fibtent::par::{set_execution, Execution};
use fibtent::postcritical::{build_partition, verify_combinatorics};
use fibtent::report::{read_lambda_json, ExperimentConfig, Lab};

fn lab() -> Lab {
    let params = read_lambda_json(include_str!("../tests/data/lambda_f.json")).expect("golden slope");
    Lab::with_params(ExperimentConfig::default(), params).expect("lab")
}

fn execution(c: &mut Criterion) {
    let lab = lab();
    let level = build_partition(&lab.cache, &lab.s, 6).unwrap();
    let mut group = c.benchmark_group("execution");
    group.sample_size(10);
    for mode in [Execution::Sequential, Execution::Parallel] {
        let name = format!("{mode:?}");
        group.bench_function(BenchmarkId::new("frequencies_1e5", &name), |b| {
            set_execution(mode);
            b.iter(|| empirical_frequencies(&lab.symbolic, &level, 100_000))
        });
        group.bench_function(BenchmarkId::new("combinatorics_k10", &name), |b| {
            set_execution(mode);
            b.iter(|| verify_combinatorics(&lab.cache, &lab.s, 10).unwrap())
        });
        group.bench_function(BenchmarkId::new("pointwise_987", &name), |b| {
            set_execution(mode);
            b.iter(|| pointwise_series(&lab.conj, &lab.cache, &lab.s, 1, 4, 987).unwrap())
        });
    }
    group.finish();
    set_execution(Execution::Parallel);
}

criterion_group!(benches, execution);
criterion_main!(benches);
