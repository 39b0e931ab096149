//! Fixed-width binary coding and the unary-prefixed length code.

use super::bits::{BitReader, BitStream};
use crate::error::{param, Error, Result};
use crate::model::Alphabet;

/// `ceil(log2 |X|)`; zero for a one-symbol alphabet.
pub fn plain_width(alphabet: Alphabet) -> u32 {
    bit_width(alphabet.size() as u64)
}

/// Bits needed to write any value in `0..count`.
pub(crate) fn bit_width(count: u64) -> u32 {
    if count <= 1 {
        0
    } else {
        64 - (count - 1).leading_zeros()
    }
}

pub fn write_plain(out: &mut BitStream, seq: &[u32], alphabet: Alphabet) -> Result<()> {
    let w = plain_width(alphabet);
    for (i, &x) in seq.iter().enumerate() {
        if !alphabet.contains(x) {
            return param(format!("symbol {x} at index {i} outside alphabet of size {}", alphabet.size()));
        }
        out.push_bits(x as u64, w);
    }
    Ok(())
}

pub fn plain_encode(seq: &[u32], alphabet: Alphabet) -> Result<BitStream> {
    let mut out = BitStream::new();
    write_plain(&mut out, seq, alphabet)?;
    Ok(out)
}

pub fn read_plain(r: &mut BitReader<'_>, alphabet: Alphabet, count: usize) -> Result<Vec<u32>> {
    let w = plain_width(alphabet);
    let mut out = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        let x = r.read_bits(w)?;
        if x >= alphabet.size() as u64 {
            return Err(Error::Corrupt(format!("plain symbol {x} outside alphabet")));
        }
        out.push(x as u32);
    }
    Ok(out)
}

pub fn plain_decode(bits: &BitStream, alphabet: Alphabet, count: usize) -> Result<Vec<u32>> {
    read_plain(&mut bits.reader(), alphabet, count)
}

/// Length of the code word for `len`: `2 floor(log2 len) + 1`.
pub fn length_code_len(len: u64) -> u32 {
    debug_assert!(len >= 1);
    2 * (63 - len.leading_zeros()) + 1
}

/// Gamma layout: `floor(log2 len)` zeros, then `len` in binary.
pub fn write_length_code(out: &mut BitStream, len: u64) -> Result<()> {
    if len == 0 {
        return param("length code needs a positive integer");
    }
    let msb = 63 - len.leading_zeros();
    out.push_bits(0, msb);
    out.push_bits(len, msb + 1);
    Ok(())
}

pub fn length_code_encode(len: u64) -> Result<BitStream> {
    let mut out = BitStream::new();
    write_length_code(&mut out, len)?;
    Ok(out)
}

pub fn read_length_code(r: &mut BitReader<'_>) -> Result<u64> {
    let mut zeros = 0u32;
    while !r.read_bit()? {
        zeros += 1;
        if zeros > 63 {
            return Err(Error::Corrupt("length code prefix longer than 63 bits".into()));
        }
    }
    let tail = r.read_bits(zeros)?;
    Ok((1u64 << zeros) | tail)
}

pub fn length_code_decode(bits: &BitStream) -> Result<u64> {
    read_length_code(&mut bits.reader())
}
