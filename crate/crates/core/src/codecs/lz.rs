//! Greedy Lempel-Ziv parsing with fixed-width pointers and gamma lengths.
//!
//! At 1-indexed position `k` the parser emits the longest `L` such that
//! `X[k..k+L)` also starts at some earlier `j < k` (the two windows may
//! overlap), together with the most recent such `j`. A symbol never seen
//! before is emitted as the literal token `T = -x, L = 1`.
//!
//! Stream layout (see FORMATS.md):
//!
//! ```text
//! mode:u8 (0 = LZ, 1 = plain)  N:varint  bits...
//! ```
//!
//! LZ bits are, per token, `T + |X| - 1` in `ceil(log2(N + |X|))` bits
//! followed by the gamma code of `L`. Plain bits are `N` fixed-width
//! symbols. The plain form is emitted whenever the LZ bits would be longer.

use super::bits::{BitReader, BitStream};
use super::plain::{bit_width, plain_width, read_length_code, read_plain, write_length_code, write_plain};
use super::{read_varint, write_varint};
use crate::error::{param, Error, Result};
use crate::model::Alphabet;

pub const MODE_LZ: u8 = 0;
pub const MODE_PLAIN: u8 = 1;

/// One parse step. `pointer <= 0` is a literal for symbol `-pointer`;
/// `pointer >= 1` copies `length` symbols starting at that 1-indexed position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LzToken {
    pub pointer: i64,
    pub length: u64,
}

impl LzToken {
    pub fn literal(symbol: u32) -> Self {
        LzToken { pointer: -(symbol as i64), length: 1 }
    }

    pub fn is_literal(&self) -> bool {
        self.pointer <= 0
    }
}

/// Suffix array by prefix doubling with two-pass counting sort.
pub(crate) fn suffix_array(s: &[u32]) -> Vec<u32> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    // Compact symbol ranks to 0..distinct.
    let mut sorted: Vec<u32> = s.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut rank: Vec<u32> = s.iter().map(|x| sorted.binary_search(x).unwrap() as u32).collect();
    let mut sa: Vec<u32> = (0..n as u32).collect();
    sa.sort_by_key(|&i| rank[i as usize]);
    let mut classes = sorted.len();
    let mut tmp = vec![0u32; n];
    let mut count = vec![0usize; n.max(classes) + 1];
    let mut next_rank = vec![0u32; n];
    let mut h = 1usize;
    while classes < n {
        // Order by second key: suffixes without a second half first.
        let mut p = 0;
        for i in (n - h.min(n))..n {
            tmp[p] = i as u32;
            p += 1;
        }
        for &i in &sa {
            if i as usize >= h {
                tmp[p] = i - h as u32;
                p += 1;
            }
        }
        // Stable counting sort by first key.
        count[..classes + 1].iter_mut().for_each(|c| *c = 0);
        for &r in &rank {
            count[r as usize + 1] += 1;
        }
        for c in 1..=classes {
            count[c] += count[c - 1];
        }
        for &i in &tmp {
            let r = rank[i as usize] as usize;
            sa[count[r]] = i;
            count[r] += 1;
        }
        let key = |i: usize| {
            let second = if i + h < n { rank[i + h] as i64 } else { -1 };
            (rank[i], second)
        };
        next_rank[sa[0] as usize] = 0;
        let mut c = 0u32;
        for w in 1..n {
            if key(sa[w] as usize) != key(sa[w - 1] as usize) {
                c += 1;
            }
            next_rank[sa[w] as usize] = c;
        }
        std::mem::swap(&mut rank, &mut next_rank);
        classes = c as usize + 1;
        h *= 2;
    }
    sa
}

/// `lcp[r] = lcp(suffix sa[r-1], suffix sa[r])`, `lcp[0] = 0` (Kasai).
fn lcp_array(s: &[u32], sa: &[u32], inv: &[u32]) -> Vec<u32> {
    let n = s.len();
    let mut lcp = vec![0u32; n];
    let mut h = 0usize;
    for i in 0..n {
        let r = inv[i] as usize;
        if r > 0 {
            let j = sa[r - 1] as usize;
            while i + h < n && j + h < n && s[i + h] == s[j + h] {
                h += 1;
            }
            lcp[r] = h as u32;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    lcp
}

/// Nearest rank on each side whose suffix starts earlier in the text.
fn earlier_neighbours(sa: &[u32]) -> (Vec<u32>, Vec<u32>) {
    const NONE: u32 = u32::MAX;
    let n = sa.len();
    let mut prev = vec![NONE; n];
    let mut next = vec![NONE; n];
    let mut stack: Vec<u32> = Vec::new();
    for r in 0..n {
        while let Some(&top) = stack.last() {
            if sa[top as usize] > sa[r] {
                next[top as usize] = r as u32;
                stack.pop();
            } else {
                break;
            }
        }
        prev[r] = stack.last().copied().unwrap_or(NONE);
        stack.push(r as u32);
    }
    (prev, next)
}

fn common_prefix(s: &[u32], a: usize, b: usize) -> usize {
    s[a..].iter().zip(&s[b..]).take_while(|(x, y)| x == y).count()
}

/// Greedy longest-match parse; pointer is the most recent match start.
pub fn lz_parse(seq: &[u32], alphabet: Alphabet) -> Result<Vec<LzToken>> {
    if seq.is_empty() {
        return param("cannot parse an empty sequence");
    }
    if let Some(&x) = seq.iter().find(|&&x| !alphabet.contains(x)) {
        return param(format!("symbol {x} outside alphabet of size {}", alphabet.size()));
    }
    let n = seq.len();
    let sa = suffix_array(seq);
    let mut inv = vec![0u32; n];
    for (r, &i) in sa.iter().enumerate() {
        inv[i as usize] = r as u32;
    }
    let lcp = lcp_array(seq, &sa, &inv);
    let (prev, next) = earlier_neighbours(&sa);

    let mut tokens = Vec::new();
    let mut k = 0usize; // 0-indexed parse position
    while k < n {
        let r = inv[k] as usize;
        let mut best = 0usize;
        for nb in [prev[r], next[r]] {
            if nb != u32::MAX {
                best = best.max(common_prefix(seq, sa[nb as usize] as usize, k));
            }
        }
        if best == 0 {
            tokens.push(LzToken::literal(seq[k]));
            k += 1;
            continue;
        }
        // Largest earlier start inside the SA interval sharing `best` symbols.
        let len = best as u32;
        let mut latest = None::<usize>;
        let mut run = u32::MAX;
        for q in (0..r).rev() {
            run = run.min(lcp[q + 1]);
            if run < len {
                break;
            }
            let j = sa[q] as usize;
            if j < k && latest.is_none_or(|l| j > l) {
                latest = Some(j);
            }
        }
        run = u32::MAX;
        for q in r + 1..n {
            run = run.min(lcp[q]);
            if run < len {
                break;
            }
            let j = sa[q] as usize;
            if j < k && latest.is_none_or(|l| j > l) {
                latest = Some(j);
            }
        }
        let j = latest.expect("a neighbour achieved the match length");
        tokens.push(LzToken { pointer: j as i64 + 1, length: best as u64 });
        k += best;
    }
    Ok(tokens)
}

/// Replay tokens; validates every pointer against its use site.
pub fn lz_expand(tokens: &[LzToken], alphabet: Alphabet, limit: usize) -> Result<Vec<u32>> {
    let mut out: Vec<u32> = Vec::new();
    for t in tokens {
        push_token(&mut out, *t, alphabet, limit)?;
    }
    Ok(out)
}

fn push_token(out: &mut Vec<u32>, t: LzToken, alphabet: Alphabet, limit: usize) -> Result<()> {
    let position = out.len() + 1;
    if t.pointer <= 0 {
        let sym = (-t.pointer) as u64;
        if t.length != 1 {
            return Err(Error::Corrupt(format!("literal with length {}", t.length)));
        }
        if sym >= alphabet.size() as u64 {
            return Err(Error::PointerOutOfRange { pointer: t.pointer, position });
        }
        if out.len() >= limit {
            return Err(Error::Corrupt("token runs past the declared length".into()));
        }
        out.push(sym as u32);
        return Ok(());
    }
    let src = t.pointer as usize;
    if src >= position {
        return Err(Error::PointerOutOfRange { pointer: t.pointer, position });
    }
    if t.length as usize > limit - out.len() {
        return Err(Error::Corrupt("match runs past the declared length".into()));
    }
    let start = src - 1;
    for q in 0..t.length as usize {
        let x = out[start + q];
        out.push(x);
    }
    Ok(())
}

/// Pointer field width for a sequence of `n` symbols.
pub fn pointer_width(n: usize, alphabet: Alphabet) -> u32 {
    bit_width(n as u64 + alphabet.size() as u64)
}

/// Bit cost of the LZ body for a token list.
pub fn lz_bits(tokens: &[LzToken], n: usize, alphabet: Alphabet) -> u64 {
    let w = pointer_width(n, alphabet) as u64;
    tokens.iter().map(|t| w + super::plain::length_code_len(t.length) as u64).sum()
}

pub fn lz_encode(seq: &[u32], alphabet: Alphabet) -> Result<Vec<u8>> {
    let n = seq.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push(MODE_PLAIN);
        write_varint(&mut out, 0);
        return Ok(out);
    }
    let tokens = lz_parse(seq, alphabet)?;
    let plain_bits = n as u64 * plain_width(alphabet) as u64;
    let mut body = BitStream::new();
    if lz_bits(&tokens, n, alphabet) <= plain_bits {
        out.push(MODE_LZ);
        let w = pointer_width(n, alphabet);
        let shift = alphabet.size() as i64 - 1;
        for t in &tokens {
            body.push_bits((t.pointer + shift) as u64, w);
            write_length_code(&mut body, t.length)?;
        }
    } else {
        out.push(MODE_PLAIN);
        write_plain(&mut body, seq, alphabet)?;
    }
    write_varint(&mut out, n as u64);
    out.extend_from_slice(&body.to_bytes());
    Ok(out)
}

pub fn lz_decode(bytes: &[u8], alphabet: Alphabet) -> Result<Vec<u32>> {
    let (&mode, mut rest) = bytes.split_first().ok_or(Error::Truncated { needed: 1, available: 0 })?;
    let n = read_varint(&mut rest)? as usize;
    // Every symbol costs at least one bit unless the alphabet is trivial,
    // which bounds any honest N by the payload size.
    if plain_width(alphabet) > 0 && mode == MODE_PLAIN && n > rest.len() * 8 {
        return Err(Error::Truncated { needed: n.div_ceil(8) - rest.len(), available: rest.len() });
    }
    let mut r = BitReader::from_bytes(rest);
    let out = match mode {
        MODE_PLAIN => read_plain(&mut r, alphabet, n)?,
        MODE_LZ => {
            let w = pointer_width(n, alphabet);
            let shift = alphabet.size() as i64 - 1;
            let mut out = Vec::with_capacity(n.min(1 << 24));
            while out.len() < n {
                let pointer = r.read_bits(w)? as i64 - shift;
                let length = read_length_code(&mut r)?;
                push_token(&mut out, LzToken { pointer, length }, alphabet, n)?;
            }
            out
        }
        other => return Err(Error::Corrupt(format!("unknown LZ mode byte {other}"))),
    };
    r.expect_padding()?;
    Ok(out)
}
