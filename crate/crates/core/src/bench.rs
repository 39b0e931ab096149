//! Measurement helpers: naive versus latent coding, latent-size search and
//! synthetic sweeps over the symmetric binary model.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::codecs::{CodecId, CodecRegistry};
use crate::container::{compress_with_latents, drr};
use crate::error::{param, Error, Result};
use crate::latent::{estimate_latents, SpectralConfig};
use crate::model::{sample_table, sbm_params, LatentAssignment, Table};
use crate::rate::{aspect_exponent, sbm_rate_triple};
use crate::rng::Rng;

/// Environment variable capping the sweep worker pool.
pub const THREADS_ENV: &str = "LATENTPACK_THREADS";

/// Bytes of the row-major table coded directly by `codec`.
pub fn naive_bytes(table: &Table, codec: CodecId) -> Result<usize> {
    let registry = CodecRegistry::default();
    Ok(registry.get(codec.wire())?.encode(&table.symbols(), table.alphabet())?.len())
}

pub fn naive_drr(table: &Table, codec: CodecId) -> Result<f64> {
    drr(naive_bytes(table, codec)?, table.rows(), table.cols(), table.alphabet())
}

/// Container size with the given latents, both latents and blocks coded by `codec`.
pub fn latent_bytes(table: &Table, latents: &LatentAssignment, codec: CodecId) -> Result<usize> {
    Ok(compress_with_latents(table, latents, codec.wire(), codec.wire(), &CodecRegistry::default())?.len())
}

pub fn latent_drr(table: &Table, latents: &LatentAssignment, codec: CodecId) -> Result<f64> {
    drr(latent_bytes(table, latents, codec)?, table.rows(), table.cols(), table.alphabet())
}

/// Run `f` on a pool sized by [`THREADS_ENV`] when set, else on the global pool.
pub fn with_worker_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub k_r: usize,
    pub k_c: usize,
    pub mean_bytes: f64,
    pub mean_drr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_k_r: usize,
    pub best_k_c: usize,
    pub grid: Vec<GridPoint>,
}

impl SearchResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k_r,k_c,mean_bytes,mean_drr\n");
        for g in &self.grid {
            let _ = writeln!(out, "{},{},{},{:.6}", g.k_r, g.k_c, g.mean_bytes, g.mean_drr);
        }
        out
    }
}

/// Compress at every `(k_r, k_c)` in the ranges, averaging `trials`
/// estimation seeds per point, and pick the smallest mean size. Ties go to
/// the earlier grid point.
pub fn search_latent_sizes(
    table: &Table,
    k_r_range: std::ops::RangeInclusive<usize>,
    k_c_range: std::ops::RangeInclusive<usize>,
    codec: CodecId,
    base: &SpectralConfig,
    trials: usize,
) -> Result<SearchResult> {
    if k_r_range.is_empty() || k_c_range.is_empty() {
        return param("latent size ranges must be non-empty");
    }
    let trials = trials.max(1);
    let points: Vec<(usize, usize)> =
        k_r_range.flat_map(|r| k_c_range.clone().map(move |c| (r, c))).collect();
    let grid = with_worker_pool(|| {
        points
            .par_iter()
            .map(|&(k_r, k_c)| {
                let mut total = 0.0;
                for t in 0..trials {
                    let cfg = SpectralConfig { k_r, k_c, seed: base.seed.wrapping_add(t as u64), ..base.clone() };
                    let latents = estimate_latents(table, &cfg)?;
                    total += latent_bytes(table, &latents, codec)? as f64;
                }
                let mean_bytes = total / trials as f64;
                let raw = table.raw_bits() / 8.0;
                let mean_drr = if raw > 0.0 { 1.0 - mean_bytes / raw } else { f64::NAN };
                Ok(GridPoint { k_r, k_c, mean_bytes, mean_drr })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let best = grid
        .iter()
        .reduce(|a, b| if b.mean_bytes < a.mean_bytes { b } else { a })
        .expect("non-empty grid");
    Ok(SearchResult { best_k_r: best.k_r, best_k_c: best.k_c, grid: grid.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    /// Template for estimation; `k_r`, `k_c` and `seed` are overwritten.
    pub spectral: SpectralConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub p0: f64,
    pub p1: f64,
    pub naive_lz: f64,
    pub naive_ans: f64,
    pub latent_lz: f64,
    pub latent_ans: f64,
    pub theory_opt: f64,
    pub theory_fs: f64,
    pub theory_lz: f64,
}

pub const SWEEP_HEADER: &str = "p0,p1,naive_lz,naive_ans,latent_lz,latent_ans,theory_opt,theory_fs,theory_lz";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.p0, r.p1, r.naive_lz, r.naive_ans, r.latent_lz, r.latent_ans, r.theory_opt, r.theory_fs, r.theory_lz
        );
    }
    out
}

/// Measured DRR of one sampled table: naive LZ, naive ANS, latent LZ, latent ANS.
fn measure(table: &Table, latents: &LatentAssignment) -> Result<[f64; 4]> {
    Ok([
        naive_drr(table, CodecId::Lz)?,
        naive_drr(table, CodecId::Ans)?,
        latent_drr(table, latents, CodecId::Lz)?,
        latent_drr(table, latents, CodecId::Ans)?,
    ])
}

/// Mean DRRs over `reps` tables per `(p0, p1)` grid point, with the
/// asymptotic predictions at `alpha = log m / log n`. Rows come out in grid
/// order, `p0` outermost.
pub fn synthetic_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.p0.is_empty() || cfg.p1.is_empty() || cfg.reps == 0 {
        return param("sweep needs non-empty grids and at least one repetition");
    }
    if cfg.p0.iter().chain(&cfg.p1).any(|p| !(0.0..=1.0).contains(p)) {
        return param("sweep probabilities must lie in [0, 1]");
    }
    let alpha = aspect_exponent(cfg.m, cfg.n);
    let jobs: Vec<(usize, f64, f64, usize)> = cfg
        .p0
        .iter()
        .flat_map(|&a| cfg.p1.iter().map(move |&b| (a, b)))
        .enumerate()
        .flat_map(|(g, (a, b))| (0..cfg.reps).map(move |r| (g, a, b, r)))
        .collect();

    let measured = with_worker_pool(|| {
        jobs.par_iter()
            .map(|&(g, p0, p1, rep)| {
                let stream = (g * cfg.reps + rep) as u64;
                let mut rng = Rng::derive(cfg.seed, stream);
                let params = sbm_params(p0, p1, cfg.k)?;
                let (table, _) = sample_table(&params, cfg.m, cfg.n, rng.next_u64())?;
                let spectral = SpectralConfig { k_r: cfg.k, k_c: cfg.k, seed: rng.next_u64(), ..cfg.spectral.clone() };
                let latents = estimate_latents(&table, &spectral)?;
                measure(&table, &latents)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    measured
        .chunks(cfg.reps)
        .zip(jobs.chunks(cfg.reps))
        .map(|(vals, job)| {
            let (_, p0, p1, _) = job[0];
            let mut mean = [0.0; 4];
            for v in vals {
                for (m, x) in mean.iter_mut().zip(v) {
                    *m += x / cfg.reps as f64;
                }
            }
            let theory = sbm_rate_triple(p0, p1, cfg.k, alpha).map_err(|e| match e {
                Error::Parameter(msg) => Error::Parameter(format!("theory at ({p0}, {p1}): {msg}")),
                other => other,
            })?;
            Ok(SweepRow {
                p0,
                p1,
                naive_lz: mean[0],
                naive_ans: mean[1],
                latent_lz: mean[2],
                latent_ans: mean[3],
                theory_opt: 1.0 - theory.ideal,
                theory_fs: 1.0 - theory.fs_lower,
                theory_lz: 1.0 - theory.lz,
            })
        })
        .collect()
}
