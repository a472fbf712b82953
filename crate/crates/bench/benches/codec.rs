use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use fhdos_bench::{busy_cplane, minimal_cplane_bytes, uplane_bytes};
use fhdos_core::codec::{classify_bytes, decode_cplane, dissect, encode_cplane};
use std::hint::black_box;

fn codec(c: &mut Criterion) {
    let mut g = c.benchmark_group("codec");
    let msg = busy_cplane();
    let enc = encode_cplane(&msg).unwrap();
    g.throughput(Throughput::Elements(1));
    g.bench_function("encode_cplane_busy", |b| b.iter(|| encode_cplane(black_box(&msg)).unwrap()));
    g.bench_function("decode_cplane_busy", |b| b.iter(|| decode_cplane(black_box(&enc)).unwrap()));

    let minimal = minimal_cplane_bytes();
    g.bench_function("dissect_minimal_cplane", |b| b.iter(|| dissect(black_box(&minimal)).unwrap()));
    g.bench_function("classify_minimal_cplane", |b| b.iter(|| classify_bytes(black_box(&minimal))));

    let big = uplane_bytes(30);
    g.throughput(Throughput::Bytes(big.len() as u64));
    g.bench_function("dissect_uplane_30prb", |b| {
        b.iter_batched(|| big.clone(), |f| dissect(&f).map(|_| ()), BatchSize::SmallInput)
    });
    g.finish();
}

criterion_group!(benches, codec);
criterion_main!(benches);
