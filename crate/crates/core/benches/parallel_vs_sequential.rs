use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use impact_subtype::clustering::{robust_labels, KMeansConfig, StandardScaler};
use impact_subtype::dataset::{extract_table, ExtractionOptions, FeatureTable};
use impact_subtype::evaluation::{mixed_test, EvalConfig, MethodSpec};
use impact_subtype::features::FeatureExtractor;
use impact_subtype::regression::{Method, TrainConfig};
use impact_subtype::signal::ImpactRecording;
use impact_subtype::synth::{generate, SynthConfig};
use impact_subtype::Execution;

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn corpus() -> (Vec<ImpactRecording>, FeatureTable) {
    let ds = generate(&SynthConfig::default(), Execution::Parallel).unwrap();
    let recs = ds.recordings();
    let table = extract_table(&recs, &FeatureExtractor::default(), &ExtractionOptions::default(), Execution::Parallel).unwrap();
    (recs, table)
}

fn bench(c: &mut Criterion) {
    let (recs, table) = corpus();
    let extractor = FeatureExtractor::default();
    let opts = ExtractionOptions::default();
    let subset: Vec<usize> = (0..16).collect();
    let scaled = StandardScaler::fit_lenient(&table.x, &subset).transform(&table.x);

    let mut g = c.benchmark_group("extract_table");
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| extract_table(&recs, &extractor, &opts, exec).unwrap()));
    }
    g.finish();

    let mut g = c.benchmark_group("robust_labels");
    for (name, exec) in POLICIES {
        let cfg = KMeansConfig { execution: exec, ..KMeansConfig::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| robust_labels(&scaled, &cfg, 100).unwrap()));
    }
    g.finish();

    let mut g = c.benchmark_group("mixed_test");
    g.sample_size(10);
    let methods = [MethodSpec::new("Baseline", Method::Baseline), MethodSpec::new("KMeans", Method::Kmeans)];
    for (name, exec) in POLICIES {
        let cfg = EvalConfig { partitions: 4, execution: exec, train: TrainConfig { execution: exec, ..TrainConfig::default() }, ..EvalConfig::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| mixed_test(&table, &methods, &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
