//! Hot kernels under a one-thread pool and the default pool.
//!
//! Without the `parallel` feature both variants run the sequential code.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tkalign_core::aligner::{csls_rescale, embedding_similarity, split_global};
use tkalign_core::encoder::{forward, EncoderConfig};
use tkalign_core::synth::{generate, SynthParams};
use tkalign_core::time_match::{build_time_similarity_matrix, TimeDictionary};
use tkalign_core::trainer::{compute_gradients, Triplet, UnionGraph};

#[cfg(feature = "parallel")]
fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        (
            "1-thread",
            rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap(),
        ),
        ("default", rayon::ThreadPoolBuilder::new().build().unwrap()),
    ]
}

#[cfg(feature = "parallel")]
fn run_in<R: Send>(pool: &rayon::ThreadPool, f: impl FnOnce() -> R + Send) -> R {
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn pools() -> Vec<(&'static str, ())> {
    vec![("sequential", ())]
}

#[cfg(not(feature = "parallel"))]
fn run_in<R>(_: &(), f: impl FnOnce() -> R) -> R {
    f()
}

fn dataset() -> tkalign_core::synth::SynthDataset {
    generate(&SynthParams {
        entities: 1000,
        ..Default::default()
    })
    .unwrap()
}

fn time_matrix(c: &mut Criterion) {
    let data = dataset();
    let d1 = TimeDictionary::build(&data.kg1);
    let d2 = TimeDictionary::build(&data.kg2);
    let ids: Vec<usize> = (0..1000).collect();
    let mut group = c.benchmark_group("time_similarity_1000x1000");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                run_in(&pool, || {
                    black_box(build_time_similarity_matrix(&d1, &d2, &ids, &ids, None))
                })
            })
        });
    }
    group.finish();
}

fn similarity_and_csls(c: &mut Criterion) {
    let data = dataset();
    let graph = UnionGraph::new(&data.kg1, &data.kg2).unwrap();
    let enc = EncoderConfig::default();
    let state = graph.init(&enc);
    let global = forward(&state, graph.operator(), &enc, None).global;
    let (g1, g2) = split_global(&global, &graph);
    let ids: Vec<usize> = (0..1000).collect();
    let mut group = c.benchmark_group("embedding_similarity_csls_1000x1000");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                run_in(&pool, || {
                    let sim = embedding_similarity(&g1, &g2, &ids, &ids).unwrap();
                    black_box(csls_rescale(&sim, 10))
                })
            })
        });
    }
    group.finish();
}

fn training_epoch(c: &mut Criterion) {
    let data = dataset();
    let graph = UnionGraph::new(&data.kg1, &data.kg2).unwrap();
    let enc = EncoderConfig::default();
    let state = graph.init(&enc);
    let batch: Vec<Triplet> = data
        .gold
        .iter()
        .take(250)
        .flat_map(|p| {
            let pos = (p.source, graph.right(p.target));
            let negatives: Vec<usize> = (1..=5).map(|k| graph.right((p.target + 7 * k) % 1000)).collect();
            negatives.into_iter().map(move |n| Triplet {
                positive: pos,
                negative: (pos.0, n),
            })
        })
        .collect();
    let mut group = c.benchmark_group("forward_backward_epoch");
    group.sample_size(20);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                run_in(&pool, || {
                    black_box(compute_gradients(&state, graph.operator(), &enc, &batch, 3.0, None))
                })
            })
        });
    }
    group.finish();
}

criterion_group!(kernels, time_matrix, similarity_and_csls, training_epoch);
criterion_main!(kernels);
