//! Spectral estimation of row and column latents.
//!
//! The table is embedded into a real matrix, its leading singular subspace
//! is found by block power iteration, and the rows of the two factors are
//! clustered either with Lloyd's KMeans or with a relative-distance
//! threshold graph.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use nalgebra::DMatrix;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::model::{Alphabet, LatentAssignment, Table};
use crate::rng::Rng;

const KMEANS_MAX_STEPS: usize = 100;
/// Largest label count for which `latent_error` enumerates permutations.
const EXACT_PERMUTATION_LIMIT: usize = 8;

/// Real values assigned to each symbol, bounded by 1 in absolute value.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMap {
    values: Vec<f64>,
}

impl EmbeddingMap {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return param("embedding needs at least one symbol");
        }
        if let Some((x, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || v.abs() > 1.0) {
            return param(format!("embedding value {v} for symbol {x} exceeds 1 in absolute value"));
        }
        Ok(EmbeddingMap { values })
    }

    /// `2x/(|X|-1) - 1`, spreading the codes evenly over `[-1, 1]`.
    pub fn affine(alphabet: Alphabet) -> Self {
        let s = alphabet.size();
        let values = if s == 1 {
            vec![0.0]
        } else {
            (0..s).map(|x| 2.0 * x as f64 / (s - 1) as f64 - 1.0).collect()
        };
        EmbeddingMap { values }
    }

    pub fn value(&self, symbol: u32) -> f64 {
        self.values[symbol as usize]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn embed(table: &Table, psi: &EmbeddingMap) -> Result<DMatrix<f64>> {
    if psi.len() < table.alphabet().len() {
        return param(format!(
            "embedding covers {} symbols but the alphabet has {}",
            psi.len(),
            table.alphabet().size()
        ));
    }
    let (m, n) = (table.rows(), table.cols());
    Ok(DMatrix::from_fn(m, n, |i, j| psi.value(table.get(i, j) as u32)))
}

/// Leading singular triplets of a matrix.
#[derive(Debug, Clone)]
pub struct SingularFactors {
    /// m × r, orthonormal columns.
    pub a: DMatrix<f64>,
    /// n × r, orthonormal columns.
    pub b: DMatrix<f64>,
    /// Non-increasing.
    pub sigma: Vec<f64>,
    /// `||M B - A diag(sigma)||_F`.
    pub residual: f64,
}

pub fn default_power_iters(m: usize, n: usize) -> usize {
    let side = m.min(n).max(1) as f64;
    (4.0 * side.log2()).ceil() as usize + 10
}

fn orthonormalize(x: DMatrix<f64>) -> DMatrix<f64> {
    x.qr().q()
}

/// Subspace iteration alternating `M B` and `M^T A` with re-orthonormalization,
/// finished by a Rayleigh-Ritz step on the r × r projection.
pub fn top_singular_vectors(m: &DMatrix<f64>, r: usize, iters: usize, seed: u64) -> Result<SingularFactors> {
    let (rows, cols) = m.shape();
    if r == 0 || r > rows.min(cols) {
        return param(format!("cannot take {r} singular vectors of a {rows}x{cols} matrix"));
    }
    let mut rng = Rng::new(seed);
    let start = DMatrix::from_fn(cols, r, |_, _| 2.0 * rng.uniform() - 1.0);
    let mut b = orthonormalize(start);
    let mut a = orthonormalize(m * &b);
    for _ in 0..iters {
        b = orthonormalize(m.transpose() * &a);
        a = orthonormalize(m * &b);
    }

    let small = a.transpose() * m * &b;
    let svd = small.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let u = DMatrix::from_fn(r, r, |i, j| u[(i, order[j])]);
    let v = DMatrix::from_fn(r, r, |i, j| v_t[(order[j], i)]);
    let sigma: Vec<f64> = order.iter().map(|&j| svd.singular_values[j]).collect();

    let a = a * u;
    let b = b * v;
    let mut diff = m * &b;
    for (j, s) in sigma.iter().enumerate() {
        let mut col = diff.column_mut(j);
        col.axpy(-s, &a.column(j), 1.0);
    }
    Ok(SingularFactors { a, b, residual: diff.norm(), sigma })
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<u32>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squared distances.
    pub wcss: f64,
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, mu) in centroids.iter().enumerate() {
        let d = sq_dist(p, mu);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn lloyd(points: &[Vec<f64>], k: usize, rng: &mut Rng) -> KMeansResult {
    let dim = points[0].len();
    let mut idx: Vec<usize> = (0..points.len()).collect();
    // Partial Fisher-Yates: k distinct starting points.
    for i in 0..k {
        let j = i + rng.below(idx.len() - i);
        idx.swap(i, j);
    }
    let mut centroids: Vec<Vec<f64>> = idx[..k].iter().map(|&i| points[i].clone()).collect();
    let mut labels: Vec<usize> = Vec::new();

    for _ in 0..KMEANS_MAX_STEPS {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == labels {
            break;
        }
        labels = next;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&labels) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..points.len())
                    .max_by(|&x, &y| {
                        let dx = sq_dist(&points[x], &centroids[labels[x]]);
                        let dy = sq_dist(&points[y], &centroids[labels[y]]);
                        dx.total_cmp(&dy).then(y.cmp(&x))
                    })
                    .expect("non-empty point set");
                centroids[c] = points[far].clone();
            }
        }
    }

    let wcss = points.iter().zip(&labels).map(|(p, &c)| sq_dist(p, &centroids[c])).sum();
    KMeansResult { labels: labels.into_iter().map(|c| c as u32).collect(), centroids, wcss }
}

/// Lloyd's algorithm from random-point starts; the restart with the smallest
/// WCSS wins, ties going to the earlier restart.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 {
        return param("kmeans needs k >= 1");
    }
    if points.len() < k {
        return param(format!("kmeans with k = {k} needs at least {k} points, got {}", points.len()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Dimension("kmeans points have differing dimensions".into()));
    }
    let runs: Vec<KMeansResult> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| lloyd(points, k, &mut Rng::derive(seed, r)))
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, run| if run.wcss < best.wcss { run } else { best })
        .expect("at least one restart"))
}

/// Connected components of the graph joining points whose distance is at most
/// `theta` times their mean norm. Two zero vectors are always joined.
pub fn threshold_cluster(points: &[Vec<f64>], theta: f64) -> Result<Vec<u32>> {
    if !(theta > 0.0) {
        return param(format!("threshold must be positive, got {theta}"));
    }
    let norms: Vec<f64> = points.iter().map(|p| norm(p)).collect();
    let mut uf = UnionFind::<usize>::new(points.len());
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let mean = (norms[i] + norms[j]) / 2.0;
            let joined = if mean == 0.0 {
                true
            } else {
                sq_dist(&points[i], &points[j]).sqrt() / mean <= theta
            };
            if joined {
                uf.union(i, j);
            }
        }
    }
    let mut ids: HashMap<usize, u32> = HashMap::new();
    Ok((0..points.len())
        .map(|i| {
            let next = ids.len() as u32;
            *ids.entry(uf.find(i)).or_insert(next)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMethod {
    KMeans,
    Threshold,
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClusterMethod::KMeans => "kmeans",
            ClusterMethod::Threshold => "threshold",
        })
    }
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" => Ok(ClusterMethod::KMeans),
            "threshold" => Ok(ClusterMethod::Threshold),
            other => Err(Error::Parameter(format!("unknown clustering method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralConfig {
    pub k_r: usize,
    pub k_c: usize,
    /// `None` picks [`default_power_iters`].
    pub power_iters: Option<usize>,
    pub restarts: usize,
    /// Fraction of rows fed to the SVD; `None` uses all of them.
    pub row_subsample: Option<f64>,
    pub method: ClusterMethod,
    pub theta: f64,
    pub seed: u64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            k_r: 2,
            k_c: 2,
            power_iters: None,
            restarts: 5,
            row_subsample: None,
            method: ClusterMethod::KMeans,
            theta: 0.05,
            seed: 0,
        }
    }
}

impl SpectralConfig {
    pub fn new(k_r: usize, k_c: usize) -> Self {
        SpectralConfig { k_r, k_c, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_r == 0 || self.k_c == 0 {
            return param("latent counts must be at least 1");
        }
        if let Some(f) = self.row_subsample {
            if !(f > 0.0 && f <= 1.0) {
                return param(format!("row subsample fraction must be in (0, 1], got {f}"));
            }
        }
        if self.method == ClusterMethod::Threshold && !(self.theta > 0.0) {
            return param(format!("threshold must be positive, got {}", self.theta));
        }
        Ok(())
    }
}

/// What the estimator saw, for verbose reporting.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SpectralReport {
    pub rank: usize,
    pub power_iters: usize,
    pub svd_rows: usize,
    pub singular_values: Vec<f64>,
    pub residual: f64,
    pub row_wcss: Option<f64>,
    pub col_wcss: Option<f64>,
    pub row_components: usize,
    pub col_components: usize,
}

fn matrix_rows(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect()
}

fn cluster(points: &[Vec<f64>], k: usize, cfg: &SpectralConfig, stream: u64) -> Result<(Vec<u32>, u32, Option<f64>)> {
    if k == 1 {
        return Ok((vec![0; points.len()], 1, None));
    }
    match cfg.method {
        ClusterMethod::KMeans => {
            let res = kmeans(points, k, cfg.restarts, Rng::derive(cfg.seed, stream).next_u64())?;
            Ok((res.labels, k as u32, Some(res.wcss)))
        }
        ClusterMethod::Threshold => {
            let labels = threshold_cluster(points, cfg.theta)?;
            let size = labels.iter().max().map_or(1, |&x| x + 1);
            Ok((labels, size, None))
        }
    }
}

/// Embed, take `max(k_r, k_c)` leading singular vectors and cluster the rows
/// of both factors. With a row subsample the SVD sees only the sampled rows
/// and every row's factor is recovered as its projection onto the column
/// factor, rescaled to unit columns.
pub fn estimate_latents(table: &Table, config: &SpectralConfig) -> Result<LatentAssignment> {
    estimate_latents_with_report(table, config).map(|(l, _)| l)
}

pub fn estimate_latents_with_report(table: &Table, config: &SpectralConfig) -> Result<(LatentAssignment, SpectralReport)> {
    config.validate()?;
    let (m, n) = (table.rows(), table.cols());
    if config.k_r > m || config.k_c > n {
        return param(format!(
            "cannot split a {m}x{n} table into {}x{} latent classes",
            config.k_r, config.k_c
        ));
    }
    if config.k_r == 1 && config.k_c == 1 {
        let report = SpectralReport { row_components: 1, col_components: 1, ..Default::default() };
        return Ok((LatentAssignment::trivial(m, n), report));
    }

    let full = embed(table, &EmbeddingMap::affine(table.alphabet()))?;
    let r = config.k_r.max(config.k_c).min(m.min(n)).max(1);
    let iters = config.power_iters.unwrap_or_else(|| default_power_iters(m, n));
    let svd_seed = Rng::derive(config.seed, 1).next_u64();

    let sub_rows = config
        .row_subsample
        .filter(|&f| f < 1.0)
        .map(|f| ((f * m as f64).ceil() as usize).clamp(r, m))
        .filter(|&s| s < m);
    let (row_factor, factors, svd_rows) = match sub_rows {
        None => {
            let f = top_singular_vectors(&full, r, iters, svd_seed)?;
            (f.a.clone(), f, m)
        }
        Some(s) => {
            let mut idx: Vec<usize> = (0..m).collect();
            Rng::derive(config.seed, 4).shuffle(&mut idx);
            let mut picked = idx[..s].to_vec();
            picked.sort_unstable();
            let sub = full.select_rows(picked.iter());
            let f = top_singular_vectors(&sub, r, iters, svd_seed)?;
            let mut proj = &full * &f.b;
            for mut col in proj.column_iter_mut() {
                let len = col.norm();
                if len > 0.0 {
                    col /= len;
                }
            }
            (proj, f, s)
        }
    };

    let (rows, size_r, row_wcss) = cluster(&matrix_rows(&row_factor), config.k_r, config, 2)?;
    let (cols, size_c, col_wcss) = cluster(&matrix_rows(&factors.b), config.k_c, config, 3)?;
    let report = SpectralReport {
        rank: r,
        power_iters: iters,
        svd_rows,
        singular_values: factors.sigma.clone(),
        residual: factors.residual,
        row_wcss,
        col_wcss,
        row_components: size_r as usize,
        col_components: size_c as usize,
    };
    Ok((LatentAssignment::new(rows, cols, size_r, size_c)?, report))
}

/// Fraction of mislabeled entries under the best relabeling of `est`.
pub fn latent_error(est: &[u32], truth: &[u32], latent_size: usize) -> Result<f64> {
    if est.len() != truth.len() {
        return param(format!("label sequences differ in length: {} vs {}", est.len(), truth.len()));
    }
    if est.is_empty() {
        return Ok(0.0);
    }
    let seen = est.iter().chain(truth).max().map_or(0, |&x| x as usize + 1);
    let l = latent_size.max(seen).max(1);
    let mut confusion = vec![vec![0i64; l]; l];
    for (&e, &t) in est.iter().zip(truth) {
        confusion[e as usize][t as usize] += 1;
    }
    let agree = if l <= EXACT_PERMUTATION_LIMIT {
        (0..l)
            .permutations(l)
            .map(|p| p.iter().enumerate().map(|(e, &t)| confusion[e][t]).sum::<i64>())
            .max()
            .unwrap_or(0)
    } else {
        let weights = Matrix::from_rows(confusion).expect("square confusion matrix");
        kuhn_munkres(&weights).0
    };
    Ok(1.0 - agree as f64 / est.len() as f64)
}
