use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use latentpack::bench::{self, SweepConfig};
use latentpack::container::{self, CompressConfig};
use latentpack::ingest::{preprocess_csv, IngestOptions};
use latentpack::latent::{estimate_latents_with_report, ClusterMethod, SpectralConfig};
use latentpack::model::{sample_table, sbm_params, Table};
use latentpack::rate::{aspect_exponent, sbm_rate_triple};
use latentpack::{CodecId, Error};

#[derive(Parser)]
#[command(name = "latentpack", version, about = "Latent-based lossless compression of categorical tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a table dump or CSV file into a container.
    Compress {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        est: EstimationArgs,
        #[command(flatten)]
        ingest: IngestArgs,
        /// Codec for latents; defaults to the block codec.
        #[arg(long, value_parser = parse_codec)]
        latent_codec: Option<CodecId>,
        /// Print the estimation report as JSON on stderr.
        #[arg(long)]
        verbose: bool,
    },
    /// Decode a container back into a table dump.
    Decompress { input: PathBuf, output: PathBuf },
    /// Compress at every latent-size pair and report the grid as CSV.
    Search {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        k_min: usize,
        #[arg(long, default_value_t = 6)]
        k_max: usize,
        /// Estimation seeds averaged per grid point.
        #[arg(long, default_value_t = 5)]
        kmeans_trials: usize,
        #[arg(long, value_parser = parse_codec, default_value = "ans")]
        codec: CodecId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        ingest: IngestArgs,
    },
    /// Measured and predicted DRR over a grid of symmetric binary models.
    Sweep {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        p0: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        p1: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_method, default_value = "kmeans")]
        method: ClusterMethod,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic rates of a symmetric binary model.
    Theory {
        #[arg(long)]
        p0: f64,
        #[arg(long)]
        p1: f64,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Aspect exponent; defaults to log m / log n.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Sample a symmetric binary model table.
    Generate {
        output: PathBuf,
        #[arg(long)]
        p0: f64,
        #[arg(long)]
        p1: f64,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write integer CSV with a header row instead of a binary dump.
        #[arg(long)]
        csv: bool,
    },
    /// Compare naive and latent coding on one table.
    Bench {
        input: PathBuf,
        #[command(flatten)]
        est: EstimationArgs,
        #[command(flatten)]
        ingest: IngestArgs,
    },
}

#[derive(Args, Clone)]
struct EstimationArgs {
    #[arg(long, value_parser = parse_codec, default_value = "ans")]
    codec: CodecId,
    /// Row latent count; searched over 1..=--k-max when omitted with --k-c.
    #[arg(long)]
    k_r: Option<usize>,
    #[arg(long)]
    k_c: Option<usize>,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    #[arg(long, value_parser = parse_method, default_value = "kmeans")]
    method: ClusterMethod,
    #[arg(long, default_value_t = 0.05)]
    theta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of rows used by the SVD.
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
}

#[derive(Args, Clone, Copy)]
struct IngestArgs {
    /// Shuffle CSV rows before compressing.
    #[arg(long)]
    shuffle: bool,
    #[arg(long, default_value_t = 0)]
    shuffle_seed: u64,
}

fn parse_codec(s: &str) -> Result<CodecId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<ClusterMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Pipeline(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(msg) => Failure::Usage(msg),
            other => Failure::Pipeline(other),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Binary dumps are recognized by their magic; anything else is parsed as CSV.
fn load_table(path: &Path, ingest: IngestArgs) -> CliResult<Table> {
    let bytes = read_file(path)?;
    if bytes.starts_with(b"LTBL") {
        return Ok(Table::read_dump(&bytes[..])?);
    }
    let opts = IngestOptions { shuffle: ingest.shuffle, seed: ingest.shuffle_seed };
    let (table, report) = preprocess_csv(&bytes[..], opts)?;
    let sidecar = path.with_extension("columns.json");
    if fs::write(&sidecar, report.to_json()).is_err() {
        eprintln!("warning: could not write {}", sidecar.display());
    }
    Ok(table)
}

fn spectral(est: &EstimationArgs, k_r: usize, k_c: usize) -> SpectralConfig {
    SpectralConfig {
        k_r,
        k_c,
        power_iters: None,
        restarts: est.restarts,
        row_subsample: est.subsample,
        method: est.method,
        theta: est.theta,
        seed: est.seed,
    }
}

/// The configured sizes, or the best pair of a square search grid.
fn choose_sizes(table: &Table, est: &EstimationArgs) -> CliResult<(usize, usize)> {
    if let (Some(r), Some(c)) = (est.k_r, est.k_c) {
        return Ok((r, c));
    }
    let r_range = est.k_r.map_or(1..=est.k_max.min(table.rows()).max(1), |r| r..=r);
    let c_range = est.k_c.map_or(1..=est.k_max.min(table.cols()).max(1), |c| c..=c);
    let res = bench::search_latent_sizes(table, r_range, c_range, est.codec, &spectral(est, 1, 1), 1)?;
    Ok((res.best_k_r, res.best_k_c))
}

fn drr_field(bytes: usize, table: &Table) -> String {
    container::drr(bytes, table.rows(), table.cols(), table.alphabet())
        .map_or_else(|_| "nan".to_string(), |d| format!("{d:.6}"))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Compress { input, output, est, ingest, latent_codec, verbose } => {
            let table = load_table(&input, ingest)?;
            let (k_r, k_c) = choose_sizes(&table, &est)?;
            let (latents, report) = estimate_latents_with_report(&table, &spectral(&est, k_r, k_c))?;
            if verbose {
                eprintln!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            }
            let config = CompressConfig {
                spectral: spectral(&est, k_r, k_c),
                latent_codec: latent_codec.unwrap_or(est.codec),
                block_codec: est.codec,
                given_latents: Some(latents.clone()),
            };
            let bytes = container::compress(&table, &config)?;
            write_file(&output, &bytes)?;
            println!(
                "m={} n={} alphabet={} k_r={} k_c={} bytes={} drr={}",
                table.rows(),
                table.cols(),
                table.alphabet().size(),
                latents.latent_size_r,
                latents.latent_size_c,
                bytes.len(),
                drr_field(bytes.len(), &table)
            );
        }
        Command::Decompress { input, output } => {
            let bytes = read_file(&input)?;
            let table = container::decompress(&bytes)?;
            write_file(&output, &table.to_dump())?;
            println!("m={} n={} alphabet={}", table.rows(), table.cols(), table.alphabet().size());
        }
        Command::Search { input, k_min, k_max, kmeans_trials, codec, seed, out, ingest } => {
            if k_min == 0 || k_min > k_max {
                return Err(Failure::Usage(format!("empty latent size range {k_min}..={k_max}")));
            }
            let table = load_table(&input, ingest)?;
            let base = SpectralConfig { seed, ..Default::default() };
            let r_max = k_max.min(table.rows());
            let c_max = k_max.min(table.cols());
            let res = bench::search_latent_sizes(&table, k_min..=r_max, k_min..=c_max, codec, &base, kmeans_trials)?;
            emit(&out, &res.to_csv())?;
            eprintln!("best_k_r={} best_k_c={}", res.best_k_r, res.best_k_c);
        }
        Command::Sweep { k, m, n, p0, p1, reps, seed, method, out } => {
            let cfg = SweepConfig {
                k,
                m,
                n,
                p0,
                p1,
                reps,
                seed,
                spectral: SpectralConfig { method, ..Default::default() },
            };
            let rows = bench::synthetic_sweep(&cfg)?;
            emit(&out, &bench::sweep_csv(&rows))?;
        }
        Command::Theory { p0, p1, k, alpha, m, n } => {
            let alpha = alpha.unwrap_or_else(|| aspect_exponent(m, n));
            let t = sbm_rate_triple(p0, p1, k, alpha)?;
            println!(
                "alpha={:.6} rate_opt={:.6} rate_fs={:.6} rate_lz={:.6} drr_opt={:.6} drr_fs={:.6} drr_lz={:.6}",
                t.alpha,
                t.ideal,
                t.fs_lower,
                t.lz,
                1.0 - t.ideal,
                1.0 - t.fs_lower,
                1.0 - t.lz
            );
        }
        Command::Generate { output, p0, p1, k, m, n, seed, csv } => {
            let params = sbm_params(p0, p1, k)?;
            let (table, _) = sample_table(&params, m, n, seed)?;
            if csv {
                let header: Vec<String> = (0..n).map(|j| format!("c{j}")).collect();
                write_file(&output, format!("{}\n{}", header.join(","), table.to_csv()).as_bytes())?;
            } else {
                write_file(&output, &table.to_dump())?;
            }
            println!("m={m} n={n} alphabet=2");
        }
        Command::Bench { input, est, ingest } => {
            let table = load_table(&input, ingest)?;
            let (k_r, k_c) = choose_sizes(&table, &est)?;
            let (latents, _) = estimate_latents_with_report(&table, &spectral(&est, k_r, k_c))?;
            let naive_lz = bench::naive_bytes(&table, CodecId::Lz)?;
            let naive_ans = bench::naive_bytes(&table, CodecId::Ans)?;
            let latent_lz = bench::latent_bytes(&table, &latents, CodecId::Lz)?;
            let latent_ans = bench::latent_bytes(&table, &latents, CodecId::Ans)?;
            println!(
                "m={} n={} alphabet={} k_r={} k_c={} naive_lz={} naive_ans={} latent_lz={} latent_ans={}",
                table.rows(),
                table.cols(),
                table.alphabet().size(),
                latents.latent_size_r,
                latents.latent_size_c,
                drr_field(naive_lz, &table),
                drr_field(naive_ans, &table),
                drr_field(latent_lz, &table),
                drr_field(latent_ans, &table)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Pipeline(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
