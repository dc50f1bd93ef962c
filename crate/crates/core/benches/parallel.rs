use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use teamvec::corpus::Phase;
use teamvec::models::{self, Feature};
use teamvec::par::Execution;
use teamvec::pipeline::{self, evaluate_cell, PipelineConfig, Resources};
use teamvec::synth::{generate, SynthConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn featurize(c: &mut Criterion) {
    let ts = generate(&SynthConfig {
        n_teams: 120,
        ..Default::default()
    })
    .unwrap();
    let res = Resources::default();
    let mut group = c.benchmark_group("featurize_entrainment");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| pipeline::featurize(black_box(&ts), Feature::Entrainment, Phase::Whole, &res, exec).unwrap())
        });
    }
    group.finish();
}

fn repeated_eval(c: &mut Criterion) {
    let ts = generate(&SynthConfig::default()).unwrap();
    let res = Resources::default();
    let cfg = PipelineConfig {
        dim: 32,
        ..Default::default()
    };
    let docs = pipeline::featurize(&ts, Feature::Sentiment, Phase::Whole, &res, Execution::Sequential).unwrap();
    let y = pipeline::labels(&ts, cfg.threshold).unwrap();
    let mut group = c.benchmark_group("repeated_eval_8_runs");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                models::repeated_eval(0, 8, exec, |s| {
                    evaluate_cell(&cfg, &docs, &y, Feature::Sentiment, Phase::Whole, s).map(|r| r.0)
                })
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, featurize, repeated_eval);
criterion_main!(benches);
