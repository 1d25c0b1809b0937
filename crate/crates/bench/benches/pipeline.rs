use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hermlie_bench::{family_constants, family_document, kodaira_thurston_document};
use hermlie_core::{analyze, hs_compatibility, hs_metric_search, kahlerize_report, samples, Config, Differential, FrameMetric};

fn differential(c: &mut Criterion) {
    let mut group = c.benchmark_group("dd_residual");
    for n in [2, 4, 6] {
        let sc = family_constants(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &sc, |b, sc| b.iter(|| Differential::new(sc).dd_residual()));
    }
    group.finish();
}

fn hs_decision(c: &mut Criterion) {
    let cfg = Config::default();
    let mut group = c.benchmark_group("hs_compatibility");
    for n in [2, 4, 6] {
        let sc = family_constants(n, 2);
        let g = FrameMetric::identity(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &(sc, g), |b, (sc, g)| b.iter(|| hs_compatibility(sc, g, &cfg).unwrap()));
    }
    group.finish();
}

fn pipelines(c: &mut Criterion) {
    let cfg = Config::default();
    let kt = kodaira_thurston_document();
    c.bench_function("analyze/kodaira_thurston", |b| b.iter(|| analyze(&kt, &cfg)));
    for (r, n) in [(1, 2), (2, 4), (3, 6)] {
        let doc = family_document(r, n, 3);
        c.bench_function(&format!("analyze/family_r{r}n{n}"), |b| b.iter(|| analyze(&doc, &cfg)));
        c.bench_function(&format!("kahlerize/family_r{r}n{n}"), |b| b.iter(|| kahlerize_report(&doc, &cfg)));
    }
}

fn metric_search(c: &mut Criterion) {
    let cfg = Config::default();
    let kt = samples::kodaira_thurston();
    let mut group = c.benchmark_group("hs_metric_search");
    group.sample_size(10);
    group.bench_function("kodaira_thurston/1_restart", |b| b.iter(|| hs_metric_search(&kt, 1, 0, &cfg)));
    group.finish();
}

criterion_group!(benches, differential, hs_decision, pipelines, metric_search);
criterion_main!(benches);
