//! Static range-ANS coder driven by exact symbol counts.
//!
//! 32-bit state kept in `[2^16, 2^32)`, 16-bit renormalization words, and
//! frequencies scaled to a `2^12` denominator. Only the exact counts are
//! stored; encoder and decoder derive the scaled table with the same
//! integer procedure ([`FrequencyTable::scaled`]).
//!
//! Raw payload: final encoder state as `u32` LE, then the renormalization
//! words as `u16` LE in the order the decoder consumes them.

use super::{read_varint, write_varint};
use crate::error::{param, Error, Result};
use crate::model::Alphabet;

pub const SCALE_BITS: u32 = 12;
pub const SCALE: u32 = 1 << SCALE_BITS;
const STATE_LOW: u64 = 1 << 16;

/// Exact symbol counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: Vec<u64>,
    total: u64,
}

impl FrequencyTable {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::Parameter("symbol counts overflow".into()))?;
        Ok(FrequencyTable { counts, total })
    }

    pub fn from_symbols(seq: &[u32], alphabet: Alphabet) -> Result<Self> {
        let mut counts = vec![0u64; alphabet.len()];
        for &x in seq {
            match counts.get_mut(x as usize) {
                Some(c) => *c += 1,
                None => return param(format!("symbol {x} outside alphabet of size {}", alphabet.size())),
            }
        }
        FrequencyTable::from_counts(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Frequencies summing to `2^12`, every present symbol at least 1.
    ///
    /// Each present symbol starts at `max(1, floor(c * 2^12 / N))`. A deficit
    /// is paid one unit at a time to present symbols by decreasing remainder
    /// `c * 2^12 mod N` (ties: lower symbol). A surplus, caused by the floor
    /// of 1, is taken one unit at a time from the symbol with the largest
    /// scaled value above 1 (ties: lower symbol).
    pub fn scaled(&self) -> Result<Vec<u32>> {
        if self.total == 0 {
            return param("cannot scale an empty frequency table");
        }
        let present = self.distinct();
        if present > SCALE as usize {
            return param(format!("{present} distinct symbols exceed the {SCALE} frequency budget"));
        }
        let n = self.total as u128;
        let mut freq = vec![0u32; self.counts.len()];
        let mut rems: Vec<(u128, usize)> = Vec::with_capacity(present);
        let mut sum: i64 = 0;
        for (x, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let prod = c as u128 * SCALE as u128;
            let f = ((prod / n) as u32).max(1);
            freq[x] = f;
            sum += f as i64;
            rems.push((prod % n, x));
        }
        let target = SCALE as i64;
        if sum < target {
            rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut i = 0;
            while sum < target {
                freq[rems[i % rems.len()].1] += 1;
                sum += 1;
                i += 1;
            }
        }
        while sum > target {
            let (x, _) = freq
                .iter()
                .enumerate()
                .filter(|(_, &f)| f > 1)
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .expect("surplus implies a symbol above 1");
            freq[x] -= 1;
            sum -= 1;
        }
        Ok(freq)
    }
}

struct Model {
    freq: Vec<u32>,
    cum: Vec<u32>,
    slot_symbol: Vec<u32>,
}

impl Model {
    fn new(table: &FrequencyTable) -> Result<Self> {
        let freq = table.scaled()?;
        let mut cum = vec![0u32; freq.len()];
        let mut slot_symbol = vec![0u32; SCALE as usize];
        let mut acc = 0u32;
        for (x, &f) in freq.iter().enumerate() {
            cum[x] = acc;
            for s in acc..acc + f {
                slot_symbol[s as usize] = x as u32;
            }
            acc += f;
        }
        Ok(Model { freq, cum, slot_symbol })
    }
}

pub fn rans_encode(seq: &[u32], table: &FrequencyTable) -> Result<Vec<u8>> {
    for (i, &x) in seq.iter().enumerate() {
        if table.counts.get(x as usize).copied().unwrap_or(0) == 0 {
            return param(format!("symbol {x} at index {i} has zero frequency"));
        }
    }
    if seq.is_empty() {
        return Ok((STATE_LOW as u32).to_le_bytes().to_vec());
    }
    let model = Model::new(table)?;
    let mut words: Vec<u16> = Vec::with_capacity(seq.len() / 4);
    let mut x: u64 = STATE_LOW;
    for &s in seq.iter().rev() {
        let f = model.freq[s as usize] as u64;
        let c = model.cum[s as usize] as u64;
        let x_max = ((STATE_LOW >> SCALE_BITS) << 16) * f;
        while x >= x_max {
            words.push(x as u16);
            x >>= 16;
        }
        x = ((x / f) << SCALE_BITS) + x % f + c;
    }
    let mut out = Vec::with_capacity(4 + 2 * words.len());
    out.extend_from_slice(&(x as u32).to_le_bytes());
    for w in words.iter().rev() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    Ok(out)
}

pub fn rans_decode(bytes: &[u8], table: &FrequencyTable, n: usize) -> Result<Vec<u32>> {
    if bytes.len() < 4 {
        return Err(Error::Truncated { needed: 4 - bytes.len(), available: bytes.len() });
    }
    if !(bytes.len() - 4).is_multiple_of(2) {
        return Err(Error::Corrupt("rANS payload has an odd number of word bytes".into()));
    }
    let mut x = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as u64;
    let mut words = bytes[4..].chunks_exact(2).map(|w| u16::from_le_bytes([w[0], w[1]]) as u64);
    if n == 0 {
        if x != STATE_LOW || words.next().is_some() {
            return Err(Error::Corrupt("non-empty rANS payload for zero symbols".into()));
        }
        return Ok(Vec::new());
    }
    if x < STATE_LOW {
        return Err(Error::Corrupt("rANS state below the normalization bound".into()));
    }
    let model = Model::new(table)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let slot = (x & (SCALE as u64 - 1)) as u32;
        let s = model.slot_symbol[slot as usize];
        let f = model.freq[s as usize] as u64;
        let c = model.cum[s as usize] as u64;
        x = f * (x >> SCALE_BITS) + slot as u64 - c;
        while x < STATE_LOW {
            let w = words.next().ok_or(Error::Truncated { needed: 2, available: 0 })?;
            x = (x << 16) | w;
        }
        out.push(s);
    }
    if x != STATE_LOW || words.next().is_some() {
        return Err(Error::Corrupt("rANS stream did not end in the initial state".into()));
    }
    Ok(out)
}

/// Self-describing form: `t:varint` (one past the largest present symbol,
/// 0 when empty), `t` count varints, then the raw payload. The payload is
/// omitted when at most one distinct symbol is present.
pub fn rans_encode_with_table(seq: &[u32], alphabet: Alphabet) -> Result<Vec<u8>> {
    let table = FrequencyTable::from_symbols(seq, alphabet)?;
    let t = table.counts.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1);
    let mut out = Vec::new();
    write_varint(&mut out, t as u64);
    for &c in &table.counts[..t] {
        write_varint(&mut out, c);
    }
    if table.distinct() > 1 {
        out.extend(rans_encode(seq, &table)?);
    }
    Ok(out)
}

pub fn rans_decode_with_table(bytes: &[u8], alphabet: Alphabet) -> Result<Vec<u32>> {
    let mut rest = bytes;
    let t = read_varint(&mut rest)? as usize;
    if t > alphabet.len() {
        return Err(Error::Corrupt(format!("count table of {t} entries for alphabet {}", alphabet.size())));
    }
    let mut counts = Vec::with_capacity(t);
    for _ in 0..t {
        counts.push(read_varint(&mut rest)?);
    }
    let table = FrequencyTable::from_counts(counts).map_err(|_| Error::Corrupt("count overflow".into()))?;
    let n = usize::try_from(table.total).map_err(|_| Error::Corrupt("symbol count too large".into()))?;
    match table.distinct() {
        0 | 1 => {
            if !rest.is_empty() {
                return Err(Error::Corrupt("payload after a single-symbol table".into()));
            }
            let sym = table.counts.iter().position(|&c| c > 0).unwrap_or(0) as u32;
            if n > (1usize << 40) {
                return Err(Error::Corrupt("implausible symbol count".into()));
            }
            Ok(vec![sym; n])
        }
        _ => {
            // Each symbol of a non-degenerate table needs some state bits;
            // refuse counts the payload cannot possibly carry.
            let max_symbols = (rest.len() as u64 + 1) * 8 * SCALE as u64;
            if table.total > max_symbols {
                return Err(Error::Truncated { needed: 1, available: rest.len() });
            }
            rans_decode(rest, &table, n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn a(n: u32) -> Alphabet {
        Alphabet::new(n).unwrap()
    }

    #[test]
    fn scaled_table_sums_and_keeps_rare_symbols() {
        let t = FrequencyTable::from_counts(vec![1_000_000, 1, 0, 3, 7]).unwrap();
        let f = t.scaled().unwrap();
        assert_eq!(f.iter().sum::<u32>(), SCALE);
        assert!(f[1] >= 1 && f[3] >= 1 && f[4] >= 1);
        assert_eq!(f[2], 0);

        let t = FrequencyTable::from_counts(vec![1, 1, 1]).unwrap();
        assert_eq!(t.scaled().unwrap(), vec![1366, 1365, 1365]);

        let many = FrequencyTable::from_counts(vec![1; 5000]).unwrap();
        assert!(many.scaled().is_err());
    }

    #[test]
    fn round_trip_small() {
        let seq = [0u32, 1, 1, 2, 0, 0, 0, 3, 1];
        let table = FrequencyTable::from_symbols(&seq, a(4)).unwrap();
        let bytes = rans_encode(&seq, &table).unwrap();
        assert_eq!(rans_decode(&bytes, &table, seq.len()).unwrap(), seq);
    }

    #[test]
    fn zero_frequency_symbol_rejected() {
        let table = FrequencyTable::from_counts(vec![3, 0]).unwrap();
        assert!(matches!(rans_encode(&[0, 1], &table), Err(Error::Parameter(_))));
    }

    #[test]
    fn degenerate_distribution_is_tiny() {
        let seq = vec![2u32; 10_000];
        let table = FrequencyTable::from_counts(vec![0, 0, 10_000]).unwrap();
        let raw = rans_encode(&seq, &table).unwrap();
        assert_eq!(raw.len(), 4);
        assert_eq!(rans_decode(&raw, &table, seq.len()).unwrap(), seq);
        let framed = rans_encode_with_table(&seq, a(3)).unwrap();
        assert!(framed.len() * 8 <= 64);
        assert_eq!(rans_decode_with_table(&framed, a(3)).unwrap(), seq);
    }

    #[test]
    fn uniform_source_near_two_bits() {
        let mut rng = Rng::new(4);
        let seq: Vec<u32> = (0..100_000).map(|_| rng.below(4) as u32).collect();
        let bytes = rans_encode_with_table(&seq, a(4)).unwrap();
        let bits = bytes.len() as f64 * 8.0;
        let bound = 2e5 + 8.0 * 1e5f64.log2() + crate::rate::ans_overhead_constant(a(4));
        assert!(bits <= bound, "{bits} > {bound}");
        assert_eq!(rans_decode_with_table(&bytes, a(4)).unwrap(), seq);
    }

    #[test]
    fn corrupt_payloads_are_rejected() {
        let mut rng = Rng::new(9);
        let seq: Vec<u32> = (0..500).map(|_| rng.below(3) as u32).collect();
        let bytes = rans_encode_with_table(&seq, a(3)).unwrap();
        assert!(rans_decode_with_table(&bytes[..bytes.len() - 2], a(3)).is_err());
        let mut flipped = bytes.clone();
        let last = flipped.len() - 1;
        flipped[last] ^= 0x40;
        assert_ne!(rans_decode_with_table(&flipped, a(3)).ok(), Some(seq.clone()));
        assert!(rans_decode_with_table(&bytes, a(2)).is_err());
    }

    #[test]
    fn empty_sequence() {
        let bytes = rans_encode_with_table(&[], a(2)).unwrap();
        assert_eq!(bytes, vec![0]);
        assert!(rans_decode_with_table(&bytes, a(2)).unwrap().is_empty());
    }
}
