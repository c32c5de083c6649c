use std::hint::black_box;
use std::thread;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gelo_bench::{random_batch, random_weights};
use gelo_core::harness::{run_offload_round, OffloadClient, OffloadMode, RoundConfig, ServerOptions, UntrustedServer};
use gelo_core::numerics::{gaussian_matrix, hungarian, rng_from_seed, sample_invertible, sample_orthogonal};
use gelo_core::protocol::{mix, unmix};
use gelo_core::Dtype;

fn samplers(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_mixing");
    for n in [64usize, 256, 512] {
        group.bench_with_input(BenchmarkId::new("orthogonal", n), &n, |b, &n| {
            b.iter(|| sample_orthogonal(black_box(n), 7).unwrap())
        });
    }
    group.sample_size(10);
    group.bench_function("general/256", |b| b.iter(|| sample_invertible(256, 100.0, 7).unwrap()));
    group.finish();
}

fn mix_unmix(c: &mut Criterion) {
    let batch = random_batch(512, 256, 1);
    let y = random_weights(512, 256, 2);
    let orthogonal = sample_orthogonal(512, 3).unwrap();
    let general = sample_invertible(512, 100.0, 3).unwrap();
    let mut group = c.benchmark_group("mix_unmix_512x256");
    group.bench_function("mix", |b| b.iter(|| mix(&orthogonal, black_box(&batch)).unwrap()));
    group.bench_function("unmix_orthogonal", |b| b.iter(|| unmix(&orthogonal, black_box(&y)).unwrap()));
    group.bench_function("unmix_general", |b| b.iter(|| unmix(&general, black_box(&y)).unwrap()));
    group.finish();
}

fn assignment(c: &mut Criterion) {
    let mut group = c.benchmark_group("hungarian");
    for n in [32usize, 128] {
        let cost = gaussian_matrix(n, n, &mut rng_from_seed(n as u64)).map(f64::abs);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cost, |b, cost| b.iter(|| hungarian(cost).unwrap()));
    }
    group.finish();
}

fn offload_round(c: &mut Criterion) {
    let mut server = UntrustedServer::bind("127.0.0.1:0", &ServerOptions::default()).unwrap();
    let addr = server.local_addr().unwrap();
    let handle = thread::spawn(move || server.serve_connections(1).unwrap());
    let mut client = OffloadClient::connect(addr.to_string()).unwrap();
    client.load_weights(1, &random_weights(256, 256, 4), Dtype::F64).unwrap();
    let h = random_batch(256, 256, 5);

    let mut group = c.benchmark_group("offload_round_256");
    for mode in [OffloadMode::Baseline, OffloadMode::Gelo] {
        let cfg = RoundConfig { mode, ..Default::default() };
        group.bench_function(mode.as_str(), |b| {
            b.iter(|| run_offload_round(&mut client, black_box(&h), 1, &cfg).unwrap())
        });
    }
    group.finish();
    drop(client);
    handle.join().unwrap();
}

criterion_group!(benches, samplers, mix_unmix, assignment, offload_round);
criterion_main!(benches);
