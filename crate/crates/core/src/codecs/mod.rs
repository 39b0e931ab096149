//! Base compressors for symbol sequences.
//!
//! Every codec maps a sequence over an [`Alphabet`] to a self-delimiting
//! byte string that carries its own symbol count. New coders plug in by
//! implementing [`SymbolCodec`] and registering with a [`CodecRegistry`].

pub mod bits;
pub mod lz;
pub mod plain;
pub mod rans;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::Alphabet;

pub use bits::{BitReader, BitStream};
pub use lz::{lz_decode, lz_encode, lz_parse, LzToken};
pub use plain::{length_code_decode, length_code_encode, plain_decode, plain_encode};
pub use rans::{rans_decode, rans_decode_with_table, rans_encode, rans_encode_with_table, FrequencyTable};

/// Unsigned LEB128.
pub fn write_varint(out: &mut Vec<u8>, v: u64) {
    leb128::write::unsigned(out, v).expect("writing to a Vec cannot fail");
}

pub fn read_varint(input: &mut &[u8]) -> Result<u64> {
    leb128::read::unsigned(input).map_err(|e| match e {
        leb128::read::Error::IoError(_) => Error::Truncated { needed: 1, available: 0 },
        leb128::read::Error::Overflow => Error::Corrupt("varint overflows 64 bits".into()),
    })
}

pub trait SymbolCodec: Send + Sync {
    /// Wire id stored in container headers.
    fn id(&self) -> u8;
    fn name(&self) -> &'static str;
    fn encode(&self, seq: &[u32], alphabet: Alphabet) -> Result<Vec<u8>>;
    fn decode(&self, bytes: &[u8], alphabet: Alphabet) -> Result<Vec<u32>>;
}

/// Built-in codec ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodecId {
    Plain = 0,
    Lz = 1,
    Ans = 2,
}

impl CodecId {
    pub fn wire(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            CodecId::Plain => "plain",
            CodecId::Lz => "lz",
            CodecId::Ans => "ans",
        }
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodecId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plain" => Ok(CodecId::Plain),
            "lz" => Ok(CodecId::Lz),
            "ans" | "rans" => Ok(CodecId::Ans),
            other => Err(Error::Parameter(format!("unknown codec {other:?}"))),
        }
    }
}

/// `N:varint` followed by fixed-width symbols.
#[derive(Debug, Default, Clone, Copy)]
pub struct PlainCodec;

impl SymbolCodec for PlainCodec {
    fn id(&self) -> u8 {
        CodecId::Plain.wire()
    }

    fn name(&self) -> &'static str {
        "plain"
    }

    fn encode(&self, seq: &[u32], alphabet: Alphabet) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_varint(&mut out, seq.len() as u64);
        out.extend(plain_encode(seq, alphabet)?.to_bytes());
        Ok(out)
    }

    fn decode(&self, bytes: &[u8], alphabet: Alphabet) -> Result<Vec<u32>> {
        let mut rest = bytes;
        let n = read_varint(&mut rest)? as usize;
        let w = plain::plain_width(alphabet) as usize;
        if w > 0 && n > rest.len() * 8 / w {
            return Err(Error::Truncated { needed: (n * w).div_ceil(8) - rest.len(), available: rest.len() });
        }
        let mut r = BitReader::from_bytes(rest);
        let out = plain::read_plain(&mut r, alphabet, n)?;
        r.expect_padding()?;
        Ok(out)
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct LzCodec;

impl SymbolCodec for LzCodec {
    fn id(&self) -> u8 {
        CodecId::Lz.wire()
    }

    fn name(&self) -> &'static str {
        "lz"
    }

    fn encode(&self, seq: &[u32], alphabet: Alphabet) -> Result<Vec<u8>> {
        lz_encode(seq, alphabet)
    }

    fn decode(&self, bytes: &[u8], alphabet: Alphabet) -> Result<Vec<u32>> {
        lz_decode(bytes, alphabet)
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct AnsCodec;

impl SymbolCodec for AnsCodec {
    fn id(&self) -> u8 {
        CodecId::Ans.wire()
    }

    fn name(&self) -> &'static str {
        "ans"
    }

    fn encode(&self, seq: &[u32], alphabet: Alphabet) -> Result<Vec<u8>> {
        rans_encode_with_table(seq, alphabet)
    }

    fn decode(&self, bytes: &[u8], alphabet: Alphabet) -> Result<Vec<u32>> {
        rans_decode_with_table(bytes, alphabet)
    }
}

/// Lookup from wire id to codec.
#[derive(Clone)]
pub struct CodecRegistry {
    codecs: Vec<Arc<dyn SymbolCodec>>,
}

impl Default for CodecRegistry {
    fn default() -> Self {
        CodecRegistry { codecs: vec![Arc::new(PlainCodec), Arc::new(LzCodec), Arc::new(AnsCodec)] }
    }
}

impl fmt::Debug for CodecRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.codecs.iter().map(|c| (c.id(), c.name()))).finish()
    }
}

impl CodecRegistry {
    /// Add or replace the codec with the same id.
    pub fn register(&mut self, codec: Arc<dyn SymbolCodec>) {
        self.codecs.retain(|c| c.id() != codec.id());
        self.codecs.push(codec);
    }

    pub fn get(&self, id: u8) -> Result<&dyn SymbolCodec> {
        self.codecs.iter().find(|c| c.id() == id).map(|c| c.as_ref()).ok_or(Error::UnknownCodec(id))
    }
}
