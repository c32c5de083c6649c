use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use gelo_core::attacks::sweep::{write_sweep_csv, SweepSpec};
use gelo_core::attacks::{AttackConfig, BssMethod, ResidualMethod};
use gelo_core::harness::bench::{format_breakdown_table, write_bench_csv, write_breakdown_csv};
use gelo_core::harness::{benchmark_sweep, BenchConfig, OffloadClient, ServerOptions, UntrustedServer};
use gelo_core::metrics::{covariance_leak, crossover_length, participation_ratio, ComplexityModel};
use gelo_core::numerics::{derive_seed, sample_invertible, sample_orthogonal};
use gelo_core::protocol::{mix, pad_shields, HiddenBatch, ShieldConfig};
use gelo_core::synthdata::{
    duplicate_report, gen_hidden_states, gen_token_stream, write_dataset, write_token_stream, TokenStreamSpec,
};
use gelo_core::{Dtype, Matrix};

use crate::config::{parse_list, RunConfig};
use crate::CliError;

const DEFAULT_BATCH_SIZES: &str = "64,128,256,512,1024,2048,4096,8192";
const DEFAULT_KS: &str = "0,2,5,10,20,40,100,200,240";
const BREAKDOWN_N: usize = 512;

fn parse_dtype(s: &str) -> Result<Dtype, String> {
    match s {
        "f32" => Ok(Dtype::F32),
        "f64" => Ok(Dtype::F64),
        other => Err(format!("expected f32 or f64, got {other:?}")),
    }
}

fn dtype_name(d: Dtype) -> &'static str {
    match d {
        Dtype::F32 => "f32",
        Dtype::F64 => "f64",
    }
}

fn create_out(cfg: &RunConfig, file: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    let path = cfg.output_dir.join(file);
    let f = File::create(&path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    Ok((path, BufWriter::new(f)))
}

pub fn serve(cfg: &RunConfig, capture: Option<&Path>) -> Result<(), CliError> {
    let opts = ServerOptions {
        capture: capture.map(Path::to_path_buf),
    };
    let server = UntrustedServer::bind(cfg.endpoint.as_str(), &opts)
        .map_err(|e| CliError::Io(format!("cannot bind {}: {e}", cfg.endpoint)))?;
    println!("listening on {}", server.local_addr()?);
    io::stdout().flush()?;
    match server.serve_forever() {
        Ok(never) => match never {},
        Err(e) => Err(CliError::Io(format!("server stopped: {e}"))),
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Batch sizes to time.
    #[arg(long, value_delimiter = ',', default_value = DEFAULT_BATCH_SIZES)]
    batch_sizes: Vec<usize>,
    /// Warmup and timed rounds per mode and size.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long)]
    baseline_only: bool,
    /// Pad gelo batches with the configured shields.
    #[arg(long)]
    shielded: bool,
    #[arg(long, default_value = "f64", value_parser = parse_dtype)]
    dtype: Dtype,
}

pub fn bench(cfg: &RunConfig, args: &BenchArgs) -> Result<(), CliError> {
    let mut client = OffloadClient::connect(cfg.endpoint.as_str())?;
    let bc = BenchConfig {
        mixing: cfg.mixing_spec(),
        shields: args.shielded.then_some(cfg.shields),
        dtype: args.dtype,
        seed: cfg.master_seed,
        baseline_only: args.baseline_only,
    };
    let rows = benchmark_sweep(&mut client, &args.batch_sizes, cfg.dims.d, cfg.dims.p, args.reps, &bc)?;

    let (bench_path, mut out) = create_out(cfg, "bench.csv")?;
    write_bench_csv(&rows, &mut out)?;
    out.flush()?;
    let (breakdown_path, mut out) = create_out(cfg, "bench_breakdown.csv")?;
    write_breakdown_csv(&rows, &mut out)?;
    out.flush()?;

    if let Some(row) = rows.iter().find(|r| r.n == BREAKDOWN_N).or(rows.last()) {
        print!("{}", format_breakdown_table(row));
    }
    println!("wrote {} and {}", bench_path.display(), breakdown_path.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    /// Batch sizes; defaults to `dims.n`.
    #[arg(long)]
    ns: Option<String>,
    /// Known-anchor counts. An empty list gives an empty sweep.
    #[arg(long, default_value = DEFAULT_KS)]
    ks: String,
    /// Residual methods: subtraction, projection, constrained.
    #[arg(long, default_value = "subtraction,projection,constrained")]
    methods: String,
    /// Separation methods: fastica, fobi, jade, jd.
    #[arg(long, default_value = "fastica")]
    bss: String,
    /// Shield norm scales; 0 sends the batch unshielded.
    #[arg(long, default_value = "0")]
    shield_scales: String,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Whitened dimension; defaults to the number of unknown rows minus one.
    #[arg(long)]
    rank: Option<usize>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "attack_sweep.csv")]
    file: String,
}

pub fn attack(cfg: &RunConfig, args: &AttackArgs) -> Result<(), CliError> {
    let ns = match &args.ns {
        Some(s) => parse_list("ns", s)?,
        None => vec![cfg.dims.n],
    };
    let mut prior = cfg.prior.clone();
    prior.d = cfg.dims.d;
    let spec = SweepSpec {
        ns,
        ks: parse_list("ks", &args.ks)?,
        methods: parse_list::<ResidualMethod>("methods", &args.methods)?,
        bss: parse_list::<BssMethod>("bss", &args.bss)?,
        shield_scales: parse_list("shield_scales", &args.shield_scales)?,
        shield_fraction: cfg.shields.fraction,
        reps: args.reps,
        prior,
        mixing: cfg.mixing_spec(),
        attack: AttackConfig {
            r: args.rank,
            ..AttackConfig::default()
        },
        master_seed: cfg.master_seed,
        threads: args
            .threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    let rows = spec.run();
    let (path, mut out) = create_out(cfg, &args.file)?;
    write_sweep_csv(&mut out, &rows)?;
    out.flush()?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    println!("wrote {} rows ({failed} infeasible) to {}", rows.len(), path.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct CrossoverArgs {
    #[arg(long, default_value_t = ComplexityModel::LLAMA2_7B.d)]
    d: u64,
    #[arg(long, default_value_t = ComplexityModel::LLAMA2_7B.d_ffn)]
    d_ffn: u64,
    #[arg(long, default_value_t = ComplexityModel::LLAMA2_7B.heads)]
    heads: u64,
}

pub fn crossover(args: &CrossoverArgs) -> Result<(), CliError> {
    let model = ComplexityModel {
        d: args.d,
        d_ffn: args.d_ffn,
        heads: args.heads,
    };
    let r = crossover_length(&model)?;
    println!("d = {}, d_ffn = {}, heads = {} (d_head = {})", model.d, model.d_ffn, model.heads, model.d_head());
    println!("projections (Q, K, V, O)   {:>15} MAdds/token", r.projections_madds);
    println!("feed-forward               {:>15} MAdds/token", r.ffn_madds);
    println!("attention core             {:>15} MAdds/token per context token", r.attn_madds_per_l);
    println!("crossover length L         {:>15}", r.l_crossover);
    Ok(())
}

fn leak_line(name: &str, leak: f64, ok: bool, rule: &str) -> String {
    format!("{:<5} {name:<32} leak = {leak:.3e}  (want {rule})", if ok { "ok" } else { "FAIL" })
}

pub fn gramcheck(cfg: &RunConfig) -> Result<(), CliError> {
    let (n, seed) = (cfg.dims.n.max(2), cfg.master_seed);
    let mut prior = cfg.prior.clone();
    prior.d = cfg.dims.d;
    prior.seed = derive_seed(seed, 0);
    let data = gen_hidden_states(n, &prior)?;
    let mut failures = Vec::new();
    let mut check = |name: &str, leak: f64, ok: bool, rule: &str| {
        println!("{}", leak_line(name, leak, ok, rule));
        if !ok {
            failures.push(name.to_string());
        }
    };

    let a = sample_orthogonal(n, derive_seed(seed, 1))?;
    let leak = covariance_leak(&mix(&a, &data)?.u, &data.h)?;
    check("orthogonal, unshielded", leak, leak <= 1e-10, "<= 1e-10");

    // kappa_max of 1 only admits orthogonal matrices
    let a = if cfg.kappa_max > 1.0 {
        sample_invertible(n, cfg.kappa_max, derive_seed(seed, 2))?
    } else {
        sample_orthogonal(n, derive_seed(seed, 2))?
    };
    let leak = covariance_leak(&mix(&a, &data)?.u, &data.h)?;
    check(&format!("general, kappa_max = {}", cfg.kappa_max), leak, leak > 1e-6, "> 1e-6");

    let shields = ShieldConfig {
        seed: derive_seed(seed, 3),
        ..cfg.shields
    };
    let shielded: Matrix = if shields.scale > 0.0 && shields.fraction > 0.0 {
        let padded = pad_shields(&data, &shields)?;
        let a = sample_orthogonal(padded.rows(), derive_seed(seed, 4))?;
        mix(&a, &padded)?.u
    } else {
        mix(&sample_orthogonal(n, derive_seed(seed, 4))?, &data)?.u
    };
    let leak = covariance_leak(&shielded, &data.h)?;
    let name = format!("shielded, fraction {} scale {}", shields.fraction, shields.scale);
    check(&name, leak, leak > 1e-6, "> 1e-6");

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(failures.join("; ")))
    }
}

#[derive(Args, Debug)]
pub struct DatagenArgs {
    /// Rows to generate; defaults to `dims.n`.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value = "f64", value_parser = parse_dtype)]
    dtype: Dtype,
    /// Also write a token stream of this length.
    #[arg(long)]
    tokens: Option<usize>,
    /// Base name of the files written to the output directory.
    #[arg(long, default_value = "hidden_states")]
    name: String,
}

fn row_norm_stats(h: &Matrix) -> (f64, f64) {
    let norms: Vec<f64> = h.row_iter().map(|r| r.norm()).collect();
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    let var = norms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / norms.len() as f64;
    (mean, var.sqrt() / mean)
}

pub fn datagen(cfg: &RunConfig, args: &DatagenArgs) -> Result<(), CliError> {
    let n = args.n.unwrap_or(cfg.dims.n);
    if n < 2 {
        return Err(CliError::Config(format!("datagen needs at least 2 rows, got {n}")));
    }
    let mut prior = cfg.prior.clone();
    prior.d = cfg.dims.d;
    prior.seed = cfg.master_seed;
    let batch: HiddenBatch = gen_hidden_states(n, &prior)?;

    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    let data_path = cfg.output_dir.join(format!("{}.geld", args.name));
    write_dataset(&data_path, &batch.h, args.dtype)?;

    let (mean, cv) = row_norm_stats(&batch.h);
    let mut report = format!(
        "rows = {n}\ndim = {}\nseed = {}\ndtype = {}\nnorm_mean = {mean:.6}\nnorm_cv = {cv:.6}\n\
         participation_ratio = {:.4}\ntarget_r_eff = {}\n",
        prior.d,
        prior.seed,
        dtype_name(args.dtype),
        participation_ratio(&batch.h)?,
        prior.r_eff,
    );

    if let Some(length) = args.tokens {
        let spec = TokenStreamSpec {
            length,
            seed: derive_seed(cfg.master_seed, 1),
            ..TokenStreamSpec::default()
        };
        let tokens = gen_token_stream(&spec)?;
        let tokens_path = cfg.output_dir.join(format!("{}.tokens.txt", args.name));
        write_token_stream(&tokens_path, &tokens)?;
        let dup = duplicate_report(&tokens, &spec.special_token_ids)?;
        let top: Vec<String> = dup.top_k.iter().map(|(id, c)| format!("{id}:{c}")).collect();
        report.push_str(&format!(
            "tokens = {length}\nduplicate_rate = {:.6}\nduplicate_rate_filtered = {:.6}\ntop_tokens = {}\n",
            dup.overall_rate,
            dup.filtered_rate,
            top.join(",")
        ));
    }

    let report_path = cfg.output_dir.join(format!("{}.report.txt", args.name));
    fs::write(&report_path, &report).map_err(|e| CliError::Io(format!("{}: {e}", report_path.display())))?;
    print!("{report}");
    println!("wrote {} and {}", data_path.display(), report_path.display());
    Ok(())
}
