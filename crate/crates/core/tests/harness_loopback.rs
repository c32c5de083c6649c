use std::thread;

use gelo_core::error::GeloError;
use gelo_core::harness::observation::read_observations;
use gelo_core::harness::wire::{ErrorCode, MsgType, WireFrame};
use gelo_core::harness::{
    benchmark_sweep, run_offload_round, BenchConfig, MixingSpec, OffloadClient, OffloadMode, RoundConfig, ServerOptions,
    UntrustedServer,
};
use gelo_core::numerics::{gaussian_matrix, rng_from_seed, Dtype, Matrix};
use gelo_core::protocol::{HiddenBatch, ShieldConfig};

/// Starts a server for `connections` clients and returns its address.
fn spawn_server(connections: usize, opts: ServerOptions) -> (String, thread::JoinHandle<()>) {
    let mut server = UntrustedServer::bind("127.0.0.1:0", &opts).unwrap();
    let addr = server.local_addr().unwrap().to_string();
    let handle = thread::spawn(move || server.serve_connections(connections).unwrap());
    (addr, handle)
}

#[test]
fn identity_request_returns_the_weights() {
    let (addr, server) = spawn_server(1, ServerOptions::default());
    let mut client = OffloadClient::connect(addr.as_str()).unwrap();
    let w = gaussian_matrix(16, 9, &mut rng_from_seed(1));
    client.load_weights(4, &w, Dtype::F64).unwrap();
    let (y, _) = client.offload(0, 4, &Matrix::identity(16, 16), Dtype::F64).unwrap();
    assert_eq!(y, w);
    drop(client);
    server.join().unwrap();
}

#[test]
fn request_before_load_is_rejected() {
    let (addr, server) = spawn_server(1, ServerOptions::default());
    let mut client = OffloadClient::connect(addr.as_str()).unwrap();
    let err = client.offload(0, 9, &Matrix::identity(3, 3), Dtype::F64).unwrap_err();
    assert!(matches!(err, GeloError::Remote { code: ErrorCode::UnknownWeight }), "{err:?}");
    // the connection survives the error
    client.load_weights(9, &Matrix::identity(3, 3), Dtype::F64).unwrap();
    assert!(client.offload(1, 9, &Matrix::identity(3, 3), Dtype::F64).is_ok());
    drop(client);
    server.join().unwrap();
}

#[test]
fn server_product_is_bit_exact() {
    let (addr, server) = spawn_server(1, ServerOptions::default());
    let mut client = OffloadClient::connect(addr.as_str()).unwrap();
    let mut rng = rng_from_seed(3);
    let w = gaussian_matrix(40, 24, &mut rng);
    client.load_weights(1, &w, Dtype::F64).unwrap();
    for b in 0..5u64 {
        let u = gaussian_matrix(17 + b as usize, 40, &mut rng);
        let (y, _) = client.offload(b, 1, &u, Dtype::F64).unwrap();
        assert_eq!(y, &u * &w);
    }
    drop(client);
    server.join().unwrap();
}

#[test]
fn capture_holds_every_request_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("obs.bin");
    let (addr, server) = spawn_server(1, ServerOptions { capture: Some(path.clone()) });
    let mut client = OffloadClient::connect(addr.as_str()).unwrap();
    let mut rng = rng_from_seed(5);
    let w = gaussian_matrix(12, 6, &mut rng);
    client.load_weights(2, &w, Dtype::F32).unwrap();
    let mut sent = Vec::new();
    for _ in 0..7 {
        let id = client.next_batch_id();
        let u = gaussian_matrix(10, 12, &mut rng);
        client.offload(id, 2, &u, Dtype::F32).unwrap();
        sent.push((id, WireFrame::with_matrix(MsgType::OffloadRequest, &u, Dtype::F32, id, 2).encode()));
    }
    let err = client.offload(99, 77, &Matrix::zeros(1, 12), Dtype::F64).unwrap_err();
    assert!(matches!(err, GeloError::Remote { .. }));
    drop(client);
    server.join().unwrap();

    let obs = read_observations(&path).unwrap();
    assert_eq!(obs.len(), sent.len() + 1);
    for (o, (id, bytes)) in obs.iter().zip(&sent) {
        assert_eq!(o.batch_id, *id);
        assert_eq!(&o.raw, bytes);
        assert_eq!(o.frame.encode(), *bytes);
    }
    assert_eq!(obs.last().unwrap().batch_id, 99);
}

#[test]
fn gelo_rounds_agree_with_baseline() {
    let (addr, server) = spawn_server(1, ServerOptions::default());
    let mut client = OffloadClient::connect(addr.as_str()).unwrap();
    let mut rng = rng_from_seed(11);
    let d = 32;
    let w = gaussian_matrix(d, 20, &mut rng);
    client.load_weights(1, &w, Dtype::F64).unwrap();
    for cfg_idx in 0..50u64 {
        let n = [1usize, 2, 7, 33, 64, 90][cfg_idx as usize % 6];
        let mixing = if cfg_idx % 2 == 0 {
            MixingSpec::Orthogonal
        } else {
            MixingSpec::General { kappa_max: 100.0 }
        };
        let shields = (cfg_idx % 3 == 0).then_some(ShieldConfig {
            fraction: 0.1,
            scale: 5.0,
            seed: 0,
        });
        let h = HiddenBatch::new(gaussian_matrix(n, d, &mut rng));
        let cfg = |mode| RoundConfig {
            mode,
            mixing,
            shields,
            dtype: Dtype::F64,
            seed: cfg_idx,
        };
        let (base, _) = run_offload_round(&mut client, &h, 1, &cfg(OffloadMode::Baseline)).unwrap();
        let (gelo, _) = run_offload_round(&mut client, &h, 1, &cfg(OffloadMode::Gelo)).unwrap();
        assert_eq!(gelo.shape(), base.shape());
        let rel = (&gelo - &base).norm() / base.norm();
        assert!(rel <= 1e-8, "config {cfg_idx}: rel {rel}");
    }
    drop(client);
    server.join().unwrap();
}

#[test]
fn gelo_is_never_cheaper_than_baseline() {
    let (addr, server) = spawn_server(1, ServerOptions::default());
    let mut client = OffloadClient::connect(addr.as_str()).unwrap();
    let rows = benchmark_sweep(&mut client, &[64, 128, 256], 128, 128, 5, &BenchConfig::default()).unwrap();
    for r in &rows {
        let g = r.gelo_total_ms().unwrap();
        assert!(g >= 0.95 * r.baseline_total_ms(), "n={} gelo {g} baseline {}", r.n, r.baseline_total_ms());
        let gelo = r.gelo.as_ref().unwrap();
        assert!(gelo.a_gen_ms > 0.0 && gelo.mix_ms > 0.0 && gelo.unmix_ms > 0.0);
    }
    drop(client);
    server.join().unwrap();
}
