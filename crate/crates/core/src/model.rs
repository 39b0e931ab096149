//! Categorical tables, the latent-variable table model, and exact oracles
//! for tiny instances.
//!
//! A table is generated by drawing one latent per row from `q_r`, one per
//! column from `q_c`, and then every cell independently from
//! `Q(. | u_i, v_j)`.

use std::io::{Read, Write};

use crate::error::{param, Error, Result};
use crate::rng::Rng;

/// Largest alphabet a [`Table`] can hold (cells are stored as bytes).
pub const MAX_TABLE_ALPHABET: u32 = 256;

/// Limit on the number of terms any exhaustive oracle will enumerate.
pub const EXHAUSTIVE_LIMIT: f64 = 1e7;

const PROB_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet(u32);

impl Alphabet {
    pub fn new(size: u32) -> Result<Self> {
        if size == 0 {
            return param("alphabet size must be positive");
        }
        Ok(Alphabet(size))
    }

    pub fn size(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0 as usize
    }

    /// `log2 |X|`, the raw cost of one symbol.
    pub fn bits_per_symbol(self) -> f64 {
        (self.0 as f64).log2()
    }

    pub fn contains(self, symbol: u32) -> bool {
        symbol < self.0
    }
}

/// An `m x n` table of symbols, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    m: usize,
    n: usize,
    alphabet: Alphabet,
    cells: Vec<u8>,
}

impl Table {
    pub fn new(m: usize, n: usize, alphabet: Alphabet, cells: Vec<u8>) -> Result<Self> {
        if alphabet.size() > MAX_TABLE_ALPHABET {
            return param(format!("table alphabet {} exceeds 256", alphabet.size()));
        }
        if cells.len() != m * n {
            return Err(Error::Dimension(format!(
                "{} cells for a {m}x{n} table",
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|&&c| !alphabet.contains(c as u32)) {
            return param(format!("cell value {bad} outside alphabet of size {}", alphabet.size()));
        }
        Ok(Table { m, n, alphabet, cells })
    }

    pub fn from_rows(rows: &[Vec<u8>], alphabet: Alphabet) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Table::new(m, n, alphabet, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.cells[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.cells[i * self.n..(i + 1) * self.n]
    }

    /// Row-major serialization as a symbol sequence.
    pub fn symbols(&self) -> Vec<u32> {
        self.cells.iter().map(|&c| c as u32).collect()
    }

    /// Column-major serialization as a symbol sequence.
    pub fn symbols_column_major(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.cells.len());
        for j in 0..self.n {
            for i in 0..self.m {
                out.push(self.get(i, j) as u32);
            }
        }
        out
    }

    pub fn raw_bits(&self) -> f64 {
        (self.m * self.n) as f64 * self.alphabet.bits_per_symbol()
    }

    /// Binary dump: `"LTBL"`, `u32` m, n, alphabet size (little-endian),
    /// then one byte per cell in row-major order.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"LTBL")?;
        for v in [self.m as u32, self.n as u32, self.alphabet.size()] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.cells)?;
        Ok(())
    }

    pub fn to_dump(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.cells.len());
        self.write_dump(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head).map_err(|_| Error::Truncated {
            needed: 16,
            available: 0,
        })?;
        if &head[..4] != b"LTBL" {
            return Err(Error::BadMagic { expected: "LTBL" });
        }
        let word = |k: usize| u32::from_le_bytes(head[4 * k..4 * k + 4].try_into().unwrap());
        let (m, n, a) = (word(1) as usize, word(2) as usize, word(3));
        let mut cells = Vec::new();
        r.read_to_end(&mut cells)?;
        if cells.len() < m * n {
            return Err(Error::Truncated {
                needed: m * n - cells.len(),
                available: cells.len(),
            });
        }
        if cells.len() > m * n {
            return Err(Error::Framing(format!("{} trailing bytes", cells.len() - m * n)));
        }
        Table::new(m, n, Alphabet::new(a)?, cells)
    }

    /// Integer CSV, one table row per line, no header.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.cells.len() * 2);
        for i in 0..self.m {
            let row: Vec<String> = self.row(i).iter().map(|c| c.to_string()).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// Parse integer CSV. The alphabet is `max + 1` unless given.
    pub fn from_csv(text: &str, alphabet: Option<Alphabet>) -> Result<Self> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<u8>()
                        .map_err(|_| Error::Parameter(format!("line {}: bad cell {f:?}", ln + 1)))
                })
                .collect::<Result<Vec<u8>>>()?;
            rows.push(row);
        }
        let max = rows.iter().flatten().copied().max().unwrap_or(0) as u32;
        let alphabet = match alphabet {
            Some(a) => a,
            None => Alphabet::new((max + 1).max(2))?,
        };
        Table::from_rows(&rows, alphabet)
    }
}

/// Row and column latent labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentAssignment {
    pub rows: Vec<u32>,
    pub cols: Vec<u32>,
    pub latent_size_r: u32,
    pub latent_size_c: u32,
}

impl LatentAssignment {
    pub fn new(rows: Vec<u32>, cols: Vec<u32>, latent_size_r: u32, latent_size_c: u32) -> Result<Self> {
        if latent_size_r == 0 || latent_size_c == 0 {
            return param("latent sizes must be positive");
        }
        if rows.iter().any(|&u| u >= latent_size_r) || cols.iter().any(|&v| v >= latent_size_c) {
            return param("latent label outside its latent alphabet");
        }
        Ok(LatentAssignment { rows, cols, latent_size_r, latent_size_c })
    }

    /// Everything in one latent class.
    pub fn trivial(m: usize, n: usize) -> Self {
        LatentAssignment { rows: vec![0; m], cols: vec![0; n], latent_size_r: 1, latent_size_c: 1 }
    }

    pub fn check_dims(&self, table: &Table) -> Result<()> {
        if self.rows.len() != table.rows() || self.cols.len() != table.cols() {
            return Err(Error::Dimension(format!(
                "latents for {}x{} applied to a {}x{} table",
                self.rows.len(),
                self.cols.len(),
                table.rows(),
                table.cols()
            )));
        }
        Ok(())
    }
}

fn check_prob_vector(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return param(format!("{what}: empty probability vector"));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return param(format!("{what}: negative or non-finite entry"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PROB_TOLERANCE {
        return param(format!("{what}: sums to {s}, not 1"));
    }
    Ok(())
}

/// Parameters of the latent table model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    latent_size_r: usize,
    latent_size_c: usize,
    alphabet: Alphabet,
    /// `q[u * latent_size_c + v][x] = Q(x | u, v)`.
    q: Vec<Vec<f64>>,
    q_r: Vec<f64>,
    q_c: Vec<f64>,
}

impl ModelParams {
    pub fn new(alphabet: Alphabet, q: Vec<Vec<f64>>, q_r: Vec<f64>, q_c: Vec<f64>) -> Result<Self> {
        let (kr, kc) = (q_r.len(), q_c.len());
        check_prob_vector(&q_r, "q_r")?;
        check_prob_vector(&q_c, "q_c")?;
        if q.len() != kr * kc {
            return param(format!("expected {} conditional distributions, got {}", kr * kc, q.len()));
        }
        for (b, dist) in q.iter().enumerate() {
            if dist.len() != alphabet.len() {
                return param(format!("Q(.|{},{}) has wrong length", b / kc, b % kc));
            }
            check_prob_vector(dist, "Q")?;
        }
        Ok(ModelParams { latent_size_r: kr, latent_size_c: kc, alphabet, q, q_r, q_c })
    }

    /// Single latent class with cell law `dist`.
    pub fn iid(dist: Vec<f64>) -> Result<Self> {
        let a = Alphabet::new(dist.len() as u32)?;
        ModelParams::new(a, vec![dist], vec![1.0], vec![1.0])
    }

    pub fn latent_size_r(&self) -> usize {
        self.latent_size_r
    }

    pub fn latent_size_c(&self) -> usize {
        self.latent_size_c
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn q_r(&self) -> &[f64] {
        &self.q_r
    }

    pub fn q_c(&self) -> &[f64] {
        &self.q_c
    }

    /// `Q(. | u, v)`.
    pub fn cond(&self, u: usize, v: usize) -> &[f64] {
        &self.q[u * self.latent_size_c + v]
    }
}

/// Symmetric binary model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmParams {
    pub p0: f64,
    pub p1: f64,
    pub k: usize,
}

impl SbmParams {
    pub fn new(p0: f64, p1: f64, k: usize) -> Result<Self> {
        for (name, p) in [("p0", p0), ("p1", p1)] {
            if !(0.0..=1.0).contains(&p) {
                return param(format!("{name} = {p} is not a probability"));
            }
        }
        if k == 0 {
            return param("k must be at least 1");
        }
        Ok(SbmParams { p0, p1, k })
    }

    /// `Q(1|u,u) = p1`, `Q(1|u,v) = p0` for `u != v`, uniform latent priors.
    pub fn to_model(self) -> ModelParams {
        let k = self.k;
        let mut q = Vec::with_capacity(k * k);
        for u in 0..k {
            for v in 0..k {
                let p = if u == v { self.p1 } else { self.p0 };
                q.push(vec![1.0 - p, p]);
            }
        }
        let prior = vec![1.0 / k as f64; k];
        ModelParams {
            latent_size_r: k,
            latent_size_c: k,
            alphabet: Alphabet(2),
            q,
            q_r: prior.clone(),
            q_c: prior,
        }
    }
}

pub fn sbm_params(p0: f64, p1: f64, k: usize) -> Result<ModelParams> {
    Ok(SbmParams::new(p0, p1, k)?.to_model())
}

/// Draw `(table, latents)` from the model. Draw order: all row latents,
/// then all column latents, then cells row-major.
pub fn sample_table(params: &ModelParams, m: usize, n: usize, seed: u64) -> Result<(Table, LatentAssignment)> {
    if m == 0 || n == 0 {
        return param("table dimensions must be positive");
    }
    if params.alphabet.size() > MAX_TABLE_ALPHABET {
        return param("model alphabet exceeds table capacity");
    }
    let mut rng = Rng::new(seed);
    let rows: Vec<u32> = (0..m).map(|_| rng.categorical(&params.q_r) as u32).collect();
    let cols: Vec<u32> = (0..n).map(|_| rng.categorical(&params.q_c) as u32).collect();
    let mut cells = Vec::with_capacity(m * n);
    for &u in &rows {
        for &v in &cols {
            cells.push(rng.categorical(params.cond(u as usize, v as usize)) as u8);
        }
    }
    let table = Table { m, n, alphabet: params.alphabet, cells };
    let latents = LatentAssignment {
        rows,
        cols,
        latent_size_r: params.latent_size_r as u32,
        latent_size_c: params.latent_size_c as u32,
    };
    Ok((table, latents))
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    fn new() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    fn value(self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Advance a base-`k` odometer; returns false after the last configuration.
fn advance(digits: &mut [usize], k: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < k {
            return true;
        }
        *d = 0;
    }
    false
}

fn ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Natural-log marginal probability of `table`, by summing over every
/// latent assignment (row latents outer, column latents inner).
pub fn exact_log_prob(params: &ModelParams, table: &Table) -> Result<f64> {
    if table.alphabet() != params.alphabet {
        return param("table and model alphabets differ");
    }
    let (m, n) = (table.rows(), table.cols());
    let (kr, kc) = (params.latent_size_r, params.latent_size_c);
    let configs = (kr as f64).powi(m as i32) * (kc as f64).powi(n as i32);
    if configs > EXHAUSTIVE_LIMIT {
        return Err(Error::Capacity { what: "latent configurations", size: configs, limit: EXHAUSTIVE_LIMIT });
    }
    // ln Q(x|u,v) lookup.
    let a = params.alphabet.len();
    let lq: Vec<f64> = params.q.iter().flat_map(|d| d.iter().map(|&p| ln(p))).collect();
    let lqr: Vec<f64> = params.q_r.iter().map(|&p| ln(p)).collect();
    let lqc: Vec<f64> = params.q_c.iter().map(|&p| ln(p)).collect();

    let mut acc = LogSumExp::new();
    let mut us = vec![0usize; m];
    loop {
        let row_prior: f64 = us.iter().map(|&u| lqr[u]).sum();
        if row_prior > f64::NEG_INFINITY {
            let mut vs = vec![0usize; n];
            loop {
                let mut lp = row_prior + vs.iter().map(|&v| lqc[v]).sum::<f64>();
                if lp > f64::NEG_INFINITY {
                    'cells: for (i, &u) in us.iter().enumerate() {
                        for (j, &v) in vs.iter().enumerate() {
                            let x = table.get(i, j) as usize;
                            lp += lq[(u * kc + v) * a + x];
                            if lp == f64::NEG_INFINITY {
                                break 'cells;
                            }
                        }
                    }
                    acc.push(lp);
                }
                if !advance(&mut vs, kc) {
                    break;
                }
            }
        }
        if !advance(&mut us, kr) {
            break;
        }
    }
    Ok(acc.value())
}

/// `H(X^{m,n})` in bits by enumerating every table.
pub fn exact_table_entropy(params: &ModelParams, m: usize, n: usize) -> Result<f64> {
    if m == 0 || n == 0 {
        return param("table dimensions must be positive");
    }
    let a = params.alphabet.len();
    let tables = (a as f64).powi((m * n) as i32);
    if tables > EXHAUSTIVE_LIMIT {
        return Err(Error::Capacity { what: "tables", size: tables, limit: EXHAUSTIVE_LIMIT });
    }
    let mut cells = vec![0usize; m * n];
    let mut h = 0.0;
    loop {
        let t = Table {
            m,
            n,
            alphabet: params.alphabet,
            cells: cells.iter().map(|&c| c as u8).collect(),
        };
        let lp = exact_log_prob(params, &t)?;
        if lp > f64::NEG_INFINITY {
            h -= lp.exp() * lp;
        }
        if !advance(&mut cells, a) {
            break;
        }
    }
    Ok(h / std::f64::consts::LN_2)
}

/// Symbol counts of one block `X(u, v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCounts {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl BlockCounts {
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// `Q_hat(. | u, v)`, or `None` for an empty block.
    pub fn frequencies(&self) -> Option<Vec<f64>> {
        if self.total == 0 {
            return None;
        }
        Some(self.counts.iter().map(|&c| c as f64 / self.total as f64).collect())
    }

    /// Empirical entropy in bits; zero for an empty block.
    pub fn entropy_bits(&self) -> f64 {
        let n = self.total as f64;
        self.counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum()
    }
}

/// Empirical block frequencies and latent marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFrequencies {
    pub latent_size_r: usize,
    pub latent_size_c: usize,
    /// Indexed `u * latent_size_c + v`.
    pub blocks: Vec<BlockCounts>,
    pub q_r: Vec<f64>,
    pub q_c: Vec<f64>,
}

impl BlockFrequencies {
    pub fn block(&self, u: usize, v: usize) -> &BlockCounts {
        &self.blocks[u * self.latent_size_c + v]
    }
}

pub fn empirical_block_freqs(table: &Table, latents: &LatentAssignment) -> Result<BlockFrequencies> {
    latents.check_dims(table)?;
    let (kr, kc) = (latents.latent_size_r as usize, latents.latent_size_c as usize);
    let a = table.alphabet().len();
    let mut blocks = vec![BlockCounts { counts: vec![0; a], total: 0 }; kr * kc];
    for (i, &u) in latents.rows.iter().enumerate() {
        let row = table.row(i);
        for (&x, &v) in row.iter().zip(&latents.cols) {
            let b = &mut blocks[u as usize * kc + v as usize];
            b.counts[x as usize] += 1;
            b.total += 1;
        }
    }
    let marginal = |labels: &[u32], k: usize| {
        let mut c = vec![0usize; k];
        for &l in labels {
            c[l as usize] += 1;
        }
        c.into_iter().map(|x| x as f64 / labels.len() as f64).collect::<Vec<_>>()
    };
    Ok(BlockFrequencies {
        latent_size_r: kr,
        latent_size_c: kc,
        blocks,
        q_r: marginal(&latents.rows, kr),
        q_c: marginal(&latents.cols, kc),
    })
}
