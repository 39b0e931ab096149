//! Container format: latents and latent-homogeneous blocks, each coded
//! separately and framed by a length header.
//!
//! ```text
//! "LTNT" version:u8
//! m n |X| k_r k_c                 (varints)
//! latent_codec:u8 block_codec:u8
//! len(z_row) len(z_col) len(z(0,0)) .. len(z(k_r-1,k_c-1))   (varints)
//! z_row z_col z(0,0) ..
//! ```
//!
//! Blocks follow lexicographic `(u, v)` order and each block lists its cells
//! row-major by original index.

use rayon::prelude::*;

use crate::codecs::{read_varint, write_varint, CodecId, CodecRegistry, SymbolCodec};
use crate::error::{param, Error, Result};
use crate::latent::{estimate_latents, SpectralConfig};
use crate::model::{Alphabet, LatentAssignment, Table, MAX_TABLE_ALPHABET};

pub const MAGIC: &[u8; 4] = b"LTNT";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CompressConfig {
    pub spectral: SpectralConfig,
    pub latent_codec: CodecId,
    pub block_codec: CodecId,
    /// Skip estimation and use these latents.
    pub given_latents: Option<LatentAssignment>,
}

impl Default for CompressConfig {
    fn default() -> Self {
        CompressConfig {
            spectral: SpectralConfig::default(),
            latent_codec: CodecId::Ans,
            block_codec: CodecId::Ans,
            given_latents: None,
        }
    }
}

impl CompressConfig {
    /// Same codec for latents and blocks.
    pub fn with_codec(spectral: SpectralConfig, codec: CodecId) -> Self {
        CompressConfig { spectral, latent_codec: codec, block_codec: codec, given_latents: None }
    }
}

/// Parsed container header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainerHeader {
    pub version: u8,
    pub rows: usize,
    pub cols: usize,
    pub alphabet: u32,
    pub k_r: u32,
    pub k_c: u32,
    pub latent_codec: u8,
    pub block_codec: u8,
    pub segment_lengths: Vec<usize>,
}

fn block_index(latents: &LatentAssignment, u: u32, v: u32) -> usize {
    (u * latents.latent_size_c + v) as usize
}

/// Blocks indexed by `u * k_c + v`.
pub fn partition(table: &Table, latents: &LatentAssignment) -> Result<Vec<Vec<u32>>> {
    latents.check_dims(table)?;
    let mut blocks = vec![Vec::new(); (latents.latent_size_r * latents.latent_size_c) as usize];
    for (i, &u) in latents.rows.iter().enumerate() {
        for (j, &v) in latents.cols.iter().enumerate() {
            blocks[block_index(latents, u, v)].push(table.get(i, j) as u32);
        }
    }
    Ok(blocks)
}

pub fn compress(table: &Table, config: &CompressConfig) -> Result<Vec<u8>> {
    compress_with(table, config, &CodecRegistry::default())
}

pub fn compress_with(table: &Table, config: &CompressConfig, registry: &CodecRegistry) -> Result<Vec<u8>> {
    let latents = match &config.given_latents {
        Some(l) => l.clone(),
        None => estimate_latents(table, &config.spectral)?,
    };
    compress_with_latents(table, &latents, config.latent_codec.wire(), config.block_codec.wire(), registry)
}

pub fn compress_with_latents(
    table: &Table,
    latents: &LatentAssignment,
    latent_codec: u8,
    block_codec: u8,
    registry: &CodecRegistry,
) -> Result<Vec<u8>> {
    let zc = registry.get(latent_codec)?;
    let bc = registry.get(block_codec)?;
    let blocks = partition(table, latents)?;

    let z_row = zc.encode(&latents.rows, Alphabet::new(latents.latent_size_r)?)?;
    let z_col = zc.encode(&latents.cols, Alphabet::new(latents.latent_size_c)?)?;
    let coded: Vec<Vec<u8>> = blocks
        .par_iter()
        .map(|b| if b.is_empty() { Ok(Vec::new()) } else { bc.encode(b, table.alphabet()) })
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for v in [
        table.rows() as u64,
        table.cols() as u64,
        table.alphabet().size() as u64,
        latents.latent_size_r as u64,
        latents.latent_size_c as u64,
    ] {
        write_varint(&mut out, v);
    }
    out.push(latent_codec);
    out.push(block_codec);
    let segments = [&z_row, &z_col].into_iter().chain(coded.iter());
    for s in segments.clone() {
        write_varint(&mut out, s.len() as u64);
    }
    for s in segments {
        out.extend_from_slice(s);
    }
    Ok(out)
}

fn take_byte(rest: &mut &[u8]) -> Result<u8> {
    let (&b, tail) = rest.split_first().ok_or(Error::Truncated { needed: 1, available: 0 })?;
    *rest = tail;
    Ok(b)
}

fn header_field(rest: &mut &[u8], what: &str, max: u64) -> Result<u64> {
    let v = read_varint(rest)?;
    if v > max {
        return Err(Error::Corrupt(format!("{what} = {v} exceeds {max}")));
    }
    Ok(v)
}

/// Parse the header and return it with the remaining payload.
pub fn read_header(bytes: &[u8]) -> Result<(ContainerHeader, &[u8])> {
    if bytes.len() < MAGIC.len() {
        if MAGIC.starts_with(bytes) {
            return Err(Error::Truncated { needed: MAGIC.len() - bytes.len(), available: bytes.len() });
        }
        return Err(Error::BadMagic { expected: "LTNT" });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic { expected: "LTNT" });
    }
    let mut rest = &bytes[4..];
    let version = take_byte(&mut rest)?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion { found: version, supported: VERSION });
    }
    let limit = u32::MAX as u64;
    let rows = header_field(&mut rest, "m", limit)? as usize;
    let cols = header_field(&mut rest, "n", limit)? as usize;
    let alphabet = header_field(&mut rest, "alphabet size", MAX_TABLE_ALPHABET as u64)? as u32;
    let k_r = header_field(&mut rest, "k_r", limit)? as u32;
    let k_c = header_field(&mut rest, "k_c", limit)? as u32;
    if alphabet == 0 || k_r == 0 || k_c == 0 {
        return Err(Error::Corrupt("zero alphabet or latent size".into()));
    }
    let latent_codec = take_byte(&mut rest)?;
    let block_codec = take_byte(&mut rest)?;

    let count = (k_r as usize)
        .checked_mul(k_c as usize)
        .and_then(|c| c.checked_add(2))
        .ok_or_else(|| Error::Corrupt(format!("{k_r}x{k_c} latent classes")))?;
    if count > rest.len() {
        return Err(Error::Truncated { needed: count - rest.len(), available: rest.len() });
    }
    let segment_lengths = (0..count)
        .map(|_| read_varint(&mut rest).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let total = segment_lengths.iter().try_fold(0usize, |acc, &l| acc.checked_add(l));
    match total {
        Some(t) if t == rest.len() => {}
        Some(t) if t < rest.len() => {
            return Err(Error::Framing(format!(
                "segments cover {t} bytes but {} follow the header",
                rest.len()
            )));
        }
        _ => {
            return Err(Error::Truncated {
                needed: total.map_or(usize::MAX, |t| t - rest.len()),
                available: rest.len(),
            });
        }
    }
    let header = ContainerHeader { version, rows, cols, alphabet, k_r, k_c, latent_codec, block_codec, segment_lengths };
    Ok((header, rest))
}

fn decode_labels(codec: &dyn SymbolCodec, seg: &[u8], size: u32, expect: usize, what: &str) -> Result<Vec<u32>> {
    let labels = codec.decode(seg, Alphabet::new(size)?)?;
    if labels.len() != expect {
        return Err(Error::Corrupt(format!("{what} latents hold {} labels, expected {expect}", labels.len())));
    }
    Ok(labels)
}

pub fn decompress(bytes: &[u8]) -> Result<Table> {
    decompress_with(bytes, &CodecRegistry::default())
}

pub fn decompress_with(bytes: &[u8], registry: &CodecRegistry) -> Result<Table> {
    decompress_full(bytes, registry).map(|(t, _)| t)
}

/// Decode and also return the latents stored in the stream.
pub fn decompress_full(bytes: &[u8], registry: &CodecRegistry) -> Result<(Table, LatentAssignment)> {
    let (h, payload) = read_header(bytes)?;
    let zc = registry.get(h.latent_codec)?;
    let bc = registry.get(h.block_codec)?;
    let alphabet = Alphabet::new(h.alphabet)?;

    let mut segs = Vec::with_capacity(h.segment_lengths.len());
    let mut rest = payload;
    for &len in &h.segment_lengths {
        let (s, tail) = rest.split_at(len);
        segs.push(s);
        rest = tail;
    }

    let rows = decode_labels(zc, segs[0], h.k_r, h.rows, "row")?;
    let cols = decode_labels(zc, segs[1], h.k_c, h.cols, "column")?;
    let latents = LatentAssignment::new(rows, cols, h.k_r, h.k_c)
        .map_err(|_| Error::Corrupt("latent label outside its latent alphabet".into()))?;

    let mut row_count = vec![0usize; h.k_r as usize];
    let mut col_count = vec![0usize; h.k_c as usize];
    latents.rows.iter().for_each(|&u| row_count[u as usize] += 1);
    latents.cols.iter().for_each(|&v| col_count[v as usize] += 1);

    let blocks: Vec<Vec<u32>> = segs[2..]
        .par_iter()
        .enumerate()
        .map(|(idx, seg)| {
            let (u, v) = (idx / h.k_c as usize, idx % h.k_c as usize);
            let expect = row_count[u] * col_count[v];
            if expect == 0 {
                if !seg.is_empty() {
                    return Err(Error::Framing(format!("empty block ({u},{v}) has {} bytes", seg.len())));
                }
                return Ok(Vec::new());
            }
            let cells = bc.decode(seg, alphabet)?;
            if cells.len() != expect {
                return Err(Error::Corrupt(format!(
                    "block ({u},{v}) decoded {} cells, expected {expect}",
                    cells.len()
                )));
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;

    let mut cursor = vec![0usize; blocks.len()];
    let mut cells = Vec::with_capacity(h.rows * h.cols);
    for &u in &latents.rows {
        for &v in &latents.cols {
            let b = block_index(&latents, u, v);
            let x = blocks[b][cursor[b]];
            if !alphabet.contains(x) {
                return Err(Error::Corrupt(format!("symbol {x} outside alphabet")));
            }
            cells.push(x as u8);
            cursor[b] += 1;
        }
    }
    Ok((Table::new(h.rows, h.cols, alphabet, cells)?, latents))
}

/// `1 - 8 len / (m n log2 |X|)`.
pub fn drr(compressed_len_bytes: usize, m: usize, n: usize, alphabet: Alphabet) -> Result<f64> {
    if alphabet.size() == 1 {
        return param("DRR is undefined for a one-symbol alphabet");
    }
    if m * n == 0 {
        return param("DRR is undefined for an empty table");
    }
    Ok(1.0 - 8.0 * compressed_len_bytes as f64 / ((m * n) as f64 * alphabet.bits_per_symbol()))
}
