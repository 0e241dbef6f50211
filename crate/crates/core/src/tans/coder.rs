use super::{emitted_bits, BitReader, Bitstream, SpreadTable};
use crate::error::{Error, Result};

/// Decoding entry for one state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecodeEntry {
    pub symbol: u32,
    /// Bits to read: `lg L - ⌊lg x'⌋` for the reduced value `x'`.
    pub nb_bits: u8,
    /// `x' << nb_bits`; the previous state is `base + bits read`.
    pub base: u32,
}

/// Encoding and decoding tables for one spread.
#[derive(Clone, Debug)]
pub struct TansCoder {
    states: u32,
    counts: Vec<u32>,
    /// Per symbol, offset of its block in `next_state`.
    starts: Vec<u32>,
    /// `next_state[starts[s] + x' - L_s]` is the state reached from reduced `x'`.
    next_state: Vec<u32>,
    decode: Vec<DecodeEntry>,
}

impl TansCoder {
    pub fn new(spread: &SpreadTable) -> Self {
        let l = spread.states();
        let log_l = spread.log_states();
        let counts = spread.counts().counts().to_vec();
        let mut starts = Vec::with_capacity(counts.len());
        let mut acc = 0u32;
        for &c in &counts {
            starts.push(acc);
            acc += c;
        }

        let mut next_state = vec![0u32; l as usize];
        let mut decode = Vec::with_capacity(l as usize);
        let mut rank = vec![0u32; counts.len()];
        for (offset, &s) in spread.symbols().iter().enumerate() {
            let s_idx = s as usize;
            let reduced = counts[s_idx] + rank[s_idx];
            next_state[(starts[s_idx] + rank[s_idx]) as usize] = l + offset as u32;
            rank[s_idx] += 1;
            let nb_bits = log_l - reduced.ilog2();
            decode.push(DecodeEntry {
                symbol: s,
                nb_bits: nb_bits as u8,
                base: reduced << nb_bits,
            });
        }
        Self {
            states: l,
            counts,
            starts,
            next_state,
            decode,
        }
    }

    #[inline]
    pub fn states(&self) -> u32 {
        self.states
    }

    #[inline]
    pub fn alphabet(&self) -> usize {
        self.counts.len()
    }

    /// Decoding entry of `state` in `[L, 2L)`.
    #[inline]
    pub fn entry(&self, state: u32) -> DecodeEntry {
        self.decode[(state - self.states) as usize]
    }

    /// One encoding step: the bits to emit (count, value) and the next state.
    pub fn encode_step(&self, state: u32, symbol: u32) -> Result<(u32, u32, u32)> {
        if !(self.states..2 * self.states).contains(&state) {
            return Err(Error::InvalidArgument(format!(
                "state {state} out of range"
            )));
        }
        let s = symbol as usize;
        let count = *self
            .counts
            .get(s)
            .ok_or_else(|| Error::InvalidArgument(format!("symbol {symbol} outside alphabet")))?;
        let nb = emitted_bits(state, count);
        let reduced = state >> nb;
        let next = self.next_state[(self.starts[s] + reduced - count) as usize];
        Ok((nb, state & ((1u32 << nb) - 1), next))
    }

    /// One decoding step from `state`, reading bits from `reader`.
    pub fn decode_step(&self, state: u32, reader: &mut BitReader<'_>) -> Result<(u32, u32)> {
        if !(self.states..2 * self.states).contains(&state) {
            return Err(Error::Decode(format!("state {state} out of range")));
        }
        let e = self.entry(state);
        let bits = reader.pop_bits(u32::from(e.nb_bits))? as u32;
        Ok((e.symbol, e.base + bits))
    }
}

/// Encodes `symbols` starting from state `L`.
///
/// Symbols are consumed back to front so that [`decode`] yields them in
/// order. Returns the bits and the final state, which the decoder needs.
pub fn encode(coder: &TansCoder, symbols: &[u32]) -> Result<(Bitstream, u32)> {
    let mut out = Bitstream::new();
    let mut state = coder.states;
    for &s in symbols.iter().rev() {
        let (nb, bits, next) = coder.encode_step(state, s)?;
        out.push_bits(u64::from(bits), nb);
        state = next;
    }
    Ok((out, state))
}

/// Decodes `n` symbols. Fails unless the whole bitstream is consumed and the
/// coder returns to its initial state `L`.
pub fn decode(coder: &TansCoder, bits: &Bitstream, final_state: u32, n: usize) -> Result<Vec<u32>> {
    let mut reader = bits.reader();
    let mut state = final_state;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (s, prev) = coder.decode_step(state, &mut reader)?;
        out.push(s);
        state = prev;
    }
    if state != coder.states || reader.remaining() != 0 {
        return Err(Error::Decode(format!(
            "stream did not unwind: state {state}, {} bits left",
            reader.remaining()
        )));
    }
    Ok(out)
}
