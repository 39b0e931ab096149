use bitvec::prelude::*;

use crate::error::{Error, Result};

/// Append-only bit sequence, most-significant bit first within each byte.
///
/// `len()` is the logical length; the zero padding added by
/// [`BitStream::to_bytes`] is not part of it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitStream {
    bits: BitVec<u8, Msb0>,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push_bit(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    /// Append the low `width` bits of `value`, high bit first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0);
        for k in (0..width).rev() {
            self.bits.push((value >> k) & 1 == 1);
        }
    }

    pub fn append(&mut self, other: &BitStream) {
        self.bits.extend_from_bitslice(&other.bits);
    }

    /// Bytes with the final partial byte zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = self.bits.clone();
        v.set_uninitialized(false);
        v.into_vec()
    }

    pub fn as_bitslice(&self) -> &BitSlice<u8, Msb0> {
        &self.bits
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader { bits: &self.bits, pos: 0 }
    }

    /// Render as a `0`/`1` string, handy in tests and format docs.
    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
    }
}

/// Cursor over a bit slice.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bits: &'a BitSlice<u8, Msb0>,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn from_bytes(bytes: &'a [u8]) -> Self {
        BitReader { bits: BitSlice::from_slice(bytes), pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }

    fn underrun(&self, want: usize) -> Error {
        let have = self.remaining();
        Error::Truncated { needed: (want - have).div_ceil(8), available: have / 8 }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.bits.len() {
            return Err(self.underrun(1));
        }
        let b = self.bits[self.pos];
        self.pos += 1;
        Ok(b)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        let w = width as usize;
        if self.remaining() < w {
            return Err(self.underrun(w));
        }
        let v = if w == 0 { 0 } else { self.bits[self.pos..self.pos + w].load_be::<u64>() };
        self.pos += w;
        Ok(v)
    }

    /// Succeeds only if what is left is byte padding made of zeros.
    pub fn expect_padding(&self) -> Result<()> {
        let rest = &self.bits[self.pos..];
        if rest.len() >= 8 || rest.any() {
            return Err(Error::Corrupt(format!("{} unexpected trailing bits", rest.len())));
        }
        Ok(())
    }
}
