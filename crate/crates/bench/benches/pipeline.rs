use std::hint::black_box;

use asrprep_bench::{random_features, synthetic_audio, toy_text};
use asrprep_core::augment::{augment_batch, sample_masks};
use asrprep_core::chunker::{make_batches, reassemble, split_chunks};
use asrprep_core::features::{extract_logmel, stack_context};
use asrprep_core::lm::{arpa_string, count_ngrams, kn_estimate, parse_arpa, perplexity, Vocabulary};
use asrprep_core::{AugmentConfig, LogmelConfig, SeededRng};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

fn features(c: &mut Criterion) {
    let audio = synthetic_audio(10, 1);
    let cfg = LogmelConfig::default();
    c.bench_function("logmel_10s", |b| {
        b.iter(|| extract_logmel(black_box(&audio), &cfg).unwrap())
    });
    let feats = extract_logmel(&audio, &cfg).unwrap();
    c.bench_function("stack_context_9", |b| {
        b.iter(|| stack_context(black_box(&feats), 9).unwrap())
    });
}

fn chunking(c: &mut Criterion) {
    let feats = random_features(3000, 180, 2);
    c.bench_function("split_chunks_3000x180", |b| {
        b.iter(|| split_chunks(black_box(&feats), 64, 0.5).unwrap())
    });
    let chunks = split_chunks(&feats, 64, 0.5).unwrap();
    c.bench_function("reassemble_3000x180", |b| {
        b.iter(|| reassemble(black_box(&chunks), 3000).unwrap())
    });
}

fn masking(c: &mut Criterion) {
    let cfg = AugmentConfig::new("3x10".parse().unwrap(), "5x18".parse().unwrap());
    c.bench_function("sample_masks", |b| {
        let mut rng = SeededRng::new(3);
        b.iter(|| sample_masks(&cfg, 64, 180, &mut rng).unwrap())
    });
    let feats = random_features(64 * 128, 180, 4);
    let batch = make_batches(split_chunks(&feats, 64, 0.0).unwrap(), 128, None)
        .unwrap()
        .remove(0);
    let rng = SeededRng::new(5);
    c.bench_function("augment_batch_128", |b| {
        b.iter(|| augment_batch(black_box(&batch), &cfg, 5000, &rng).unwrap())
    });
}

fn language_model(c: &mut Criterion) {
    let text = toy_text(5000, 1000, 6);
    let vocab = Vocabulary::from_corpus(&text);
    let ids = vocab.encode_corpus(&text);
    c.bench_function("count_ngrams_4", |b| {
        b.iter(|| count_ngrams(black_box(&ids), 4, &vocab).unwrap())
    });
    let counts = count_ngrams(&ids, 4, &vocab).unwrap();
    c.bench_function("kn_estimate_4", |b| {
        b.iter_batched(|| counts.clone(), |c| kn_estimate(&c).unwrap(), BatchSize::LargeInput)
    });
    let model = kn_estimate(&counts).unwrap();
    let dev = vocab.encode_corpus(&toy_text(500, 1000, 7));
    c.bench_function("perplexity_500", |b| {
        b.iter(|| perplexity(&model, black_box(&dev)).unwrap())
    });
    let arpa = arpa_string(&model);
    c.bench_function("parse_arpa", |b| b.iter(|| parse_arpa(black_box(&arpa)).unwrap()));
}

criterion_group!(benches, features, chunking, masking, language_model);
criterion_main!(benches);
