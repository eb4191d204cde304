use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use logsift::corpus::gen_corpus;
use logsift::matcher::{count_batch, CompiledTemplateSet};
use logsift::mining::{kde_density, WeightedPoint};
use logsift::robustness::{evaluate, EvalOptions, MaskingExtractor, PerturbationKind};
use logsift::signature::group;
use logsift::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench_grouping(c: &mut Criterion) {
    let corpus = gen_corpus(200, 100_000, 1);
    let mut g = c.benchmark_group("signature_grouping");
    g.throughput(Throughput::Elements(corpus.records.len() as u64));
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| group(corpus.records.iter().cloned(), 5, 42, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_coverage(c: &mut Criterion) {
    let corpus = gen_corpus(200, 100_000, 2);
    let set = CompiledTemplateSet::compile(corpus.templates.clone()).unwrap();
    let mut g = c.benchmark_group("coverage");
    g.throughput(Throughput::Elements(corpus.records.len() as u64));
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| count_batch(&set, &corpus.records, exec))
        });
    }
    g.finish();
}

fn bench_evaluate(c: &mut Criterion) {
    let corpus = gen_corpus(100, 2_000, 3);
    let set = CompiledTemplateSet::compile(corpus.templates.clone()).unwrap();
    let messages: Vec<String> = corpus.records.iter().take(500).map(|r| r.message.clone()).collect();
    let mut g = c.benchmark_group("robustness_evaluate");
    g.throughput(Throughput::Elements((messages.len() * 7) as u64));
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = EvalOptions {
            exec,
            ..EvalOptions::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| evaluate(&set, &messages, &PerturbationKind::ALL, &MaskingExtractor, opts).unwrap())
        });
    }
    g.finish();
}

fn bench_kde(c: &mut Criterion) {
    let pts: Vec<WeightedPoint> = (0..2_000)
        .map(|i| WeightedPoint::new((i * 37 % 1000) as f64, (i * 91 % 700) as f64, 1.0))
        .collect();
    let mut g = c.benchmark_group("kde_200x200");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| kde_density(&pts, (200, 200), None, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_grouping, bench_coverage, bench_evaluate, bench_kde);
criterion_main!(benches);
