//! rANS-coded headers.
//!
//! Wire layout:
//!
//! ```text
//! varint(D) varint(K) varint(payload_len) payload[payload_len] state:u32le
//! ```
//!
//! Varints are unsigned LEB128. The coder keeps a 32-bit state in
//! `[2^23, 2^31)` and renormalizes a byte at a time. Coordinates are decoded
//! from `s = D` down to `s = 2`, each under `Pr(Q_s = i | s, k)` with
//! frequencies scaled to `2^16`; `Q_1` is whatever remains of `K`.

use std::io::Cursor;

use num_bigint::BigUint;

use super::{lower_column_in_place, CompositionModel};
use crate::error::{Error, Result};
use crate::quantizer::CountVector;

/// Frequency precision of the coder.
pub const PROB_BITS: u32 = 16;
const PROB_SCALE: u32 = 1 << PROB_BITS;
/// Every feasible count needs a nonzero frequency, which bounds `K`.
pub const MAX_STREAM_TOTAL: u32 = PROB_SCALE - 1;
const STATE_LOW: u32 = 1 << 23;
const MAX_ALPHABET: u64 = 1 << 24;

/// A serialized header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeaderBytes(Vec<u8>);

impl HeaderBytes {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    /// Length of the coded payload plus the final coder state, in bits.
    /// Excludes the varint prefix.
    pub fn payload_bits(&self) -> u64 {
        let mut cur = Cursor::new(self.0.as_slice());
        for _ in 0..2 {
            leb128::read::unsigned(&mut cur).expect("well-formed header");
        }
        let len = leb128::read::unsigned(&mut cur).expect("well-formed header");
        (len + 4) * 8
    }
}

impl From<Vec<u8>> for HeaderBytes {
    fn from(v: Vec<u8>) -> Self {
        Self(v)
    }
}

/// Frequencies of `i = 0..=k` for one coordinate, summing to `2^16`.
///
/// Weights `n(s-1, k-i)` are reduced to their top 52 bits, every `i` gets a
/// frequency of one, and the rest of the scale is shared by largest
/// remainder (ties to the lower `i`). Pure integer arithmetic, so encoder and
/// decoder agree bit for bit.
fn frequencies(lower: &[BigUint], k: u32) -> Vec<u32> {
    let n = k as usize + 1;
    // n(s-1, ·) is non-decreasing in k, so the widest weight is the last one
    let shift = lower[k as usize].bits().saturating_sub(52);
    let weights: Vec<u64> = (0..n)
        .map(|i| bits_from(&lower[k as usize - i], shift))
        .collect();
    let total: u128 = weights.iter().map(|&w| u128::from(w)).sum();
    let spare = u128::from(PROB_SCALE) - n as u128;

    let mut freqs = vec![1u32; n];
    let mut remainders = Vec::with_capacity(n);
    let mut handed_out = 0u128;
    for (i, &w) in weights.iter().enumerate() {
        let scaled = u128::from(w) * spare;
        let quota = scaled / total;
        freqs[i] += quota as u32;
        handed_out += quota;
        remainders.push((scaled % total, i));
    }
    let leftover = (spare - handed_out) as usize;
    if leftover > 0 {
        let by_remainder = |a: &(u128, usize), b: &(u128, usize)| b.0.cmp(&a.0).then(a.1.cmp(&b.1));
        if leftover < n {
            remainders.select_nth_unstable_by(leftover - 1, by_remainder);
        }
        for &(_, i) in &remainders[..leftover] {
            freqs[i] += 1;
        }
    }
    debug_assert_eq!(freqs.iter().sum::<u32>(), PROB_SCALE);
    freqs
}

/// `v >> shift`, for results known to fit in 64 bits.
fn bits_from(v: &BigUint, shift: u64) -> u64 {
    let (word, offset) = ((shift / 64) as usize, (shift % 64) as u32);
    let mut digits = v.iter_u64_digits().skip(word);
    let lo = digits.next().unwrap_or(0) >> offset;
    let hi = match (offset, digits.next()) {
        (0, _) | (_, None) => 0,
        (o, Some(d)) => d << (64 - o),
    };
    lo | hi
}

struct RansEncoder {
    state: u32,
    // bytes in emission order; the decoder consumes them reversed
    out: Vec<u8>,
}

impl RansEncoder {
    fn new() -> Self {
        Self {
            state: STATE_LOW,
            out: Vec::new(),
        }
    }

    fn put(&mut self, start: u32, freq: u32) {
        let x_max = ((STATE_LOW >> PROB_BITS) << 8) * freq;
        let mut x = self.state;
        while x >= x_max {
            self.out.push(x as u8);
            x >>= 8;
        }
        self.state = ((x / freq) << PROB_BITS) + (x % freq) + start;
    }
}

struct RansDecoder<'a> {
    state: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RansDecoder<'a> {
    fn slot(&self) -> u32 {
        self.state & (PROB_SCALE - 1)
    }

    fn advance(&mut self, start: u32, freq: u32) -> Result<()> {
        let mut x = freq * (self.state >> PROB_BITS) + self.slot() - start;
        while x < STATE_LOW {
            let b = *self
                .input
                .get(self.pos)
                .ok_or_else(|| Error::Decode("header payload truncated".into()))?;
            self.pos += 1;
            x = (x << 8) | u32::from(b);
        }
        self.state = x;
        Ok(())
    }
}

/// Codes `counts` as a self-delimiting header.
pub fn stream_encode_header(counts: &CountVector) -> Result<HeaderBytes> {
    let total = counts.total();
    if total > MAX_STREAM_TOTAL {
        return Err(Error::InvalidArgument(format!(
            "total {total} exceeds {MAX_STREAM_TOTAL} supported by the stream coder"
        )));
    }
    let model = CompositionModel::new(counts.len(), total)?;

    // (start, freq) per coordinate in decoding order s = D..2
    let mut symbols = Vec::with_capacity(counts.len());
    let mut k = total;
    let mut col = model.column(counts.len());
    for s in (2..=counts.len()).rev() {
        if k == 0 {
            break;
        }
        col.truncate(k as usize + 1);
        lower_column_in_place(&mut col);
        let lower = &col;
        let q = counts[s - 1];
        let freqs = frequencies(lower, k);
        let start: u32 = freqs[..q as usize].iter().sum();
        symbols.push((start, freqs[q as usize]));
        k -= q;
    }

    let mut enc = RansEncoder::new();
    for &(start, freq) in symbols.iter().rev() {
        enc.put(start, freq);
    }

    let mut bytes = Vec::with_capacity(enc.out.len() + 16);
    leb128::write::unsigned(&mut bytes, counts.len() as u64).expect("vec write");
    leb128::write::unsigned(&mut bytes, u64::from(total)).expect("vec write");
    leb128::write::unsigned(&mut bytes, enc.out.len() as u64).expect("vec write");
    bytes.extend(enc.out.iter().rev());
    bytes.extend_from_slice(&enc.state.to_le_bytes());
    Ok(HeaderBytes(bytes))
}

fn read_varint(cur: &mut Cursor<&[u8]>, what: &str) -> Result<u64> {
    leb128::read::unsigned(cur).map_err(|e| Error::Decode(format!("{what}: {e}")))
}

/// Decodes a header from the front of `bytes`, returning the counts and the
/// number of bytes consumed.
pub fn stream_decode_header(bytes: &[u8]) -> Result<(CountVector, usize)> {
    let mut cur = Cursor::new(bytes);
    let alphabet = read_varint(&mut cur, "alphabet")?;
    let total = read_varint(&mut cur, "total")?;
    let payload_len = read_varint(&mut cur, "payload length")?;
    if alphabet == 0 || alphabet > MAX_ALPHABET {
        return Err(Error::Decode(format!(
            "alphabet size {alphabet} out of range"
        )));
    }
    if total > u64::from(MAX_STREAM_TOTAL) {
        return Err(Error::Decode(format!("total {total} out of range")));
    }
    let (alphabet, total) = (alphabet as usize, total as u32);

    let start = cur.position() as usize;
    let payload_end = start
        .checked_add(usize::try_from(payload_len).unwrap_or(usize::MAX))
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::Decode("header payload truncated".into()))?;
    let end = payload_end + 4;
    let state_bytes: [u8; 4] = bytes
        .get(payload_end..end)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| Error::Decode("missing coder state".into()))?;

    let mut dec = RansDecoder {
        state: u32::from_le_bytes(state_bytes),
        input: &bytes[start..payload_end],
        pos: 0,
    };
    if dec.state < STATE_LOW {
        return Err(Error::Decode("coder state out of range".into()));
    }

    let model = CompositionModel::new(alphabet, total)?;
    let mut counts = vec![0u32; alphabet];
    let mut k = total;
    let mut col = model.column(alphabet);
    for s in (2..=alphabet).rev() {
        if k == 0 {
            break;
        }
        col.truncate(k as usize + 1);
        lower_column_in_place(&mut col);
        let lower = &col;
        let freqs = frequencies(lower, k);
        let slot = dec.slot();
        let mut cum = 0u32;
        let mut q = 0usize;
        while cum + freqs[q] <= slot {
            cum += freqs[q];
            q += 1;
        }
        dec.advance(cum, freqs[q])?;
        counts[s - 1] = q as u32;
        k -= q as u32;
    }
    counts[0] = k;

    if dec.pos != dec.input.len() || dec.state != STATE_LOW {
        return Err(Error::Decode(
            "coder state inconsistent after decoding".into(),
        ));
    }
    Ok((CountVector::with_total(counts, total)?, end))
}
