use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lmpkit::geometry;
use lmpkit::lmp::{check_certificate, Tolerances};
use lmpkit::problem::{builtin_example, Example, ExampleParams};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", one), ("parallel", all)]
}

fn bench_check(c: &mut Criterion) {
    let fx = builtin_example(Example::Ex2, &ExampleParams::ex2(1.0, 0.5, 4000)).unwrap();
    let tol = Tolerances::default();
    let mut group = c.benchmark_group("check_certificate_ex2_n4000");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| check_certificate(&fx.problem, &fx.trajectory, &fx.certificate, &tol)))
        });
    }
    group.finish();
}

fn bench_contact(c: &mut Criterion) {
    let fx = builtin_example(Example::Ex2, &ExampleParams::ex2(1.0, 0.5, 20000)).unwrap();
    let mut group = c.benchmark_group("contact_set_ex2_n20000");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| geometry::contact_set(&fx.problem, &fx.trajectory, 1e-8, 1e-8).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_check, bench_contact);
criterion_main!(benches);
