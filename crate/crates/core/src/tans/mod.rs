//! Tabled ANS: symbol spreads, coding tables and the bit-level coder.
//!
//! An automaton with `L` states works on `I = {L, ..., 2L-1}`. A spread
//! assigns each state a symbol, symbol `s` receiving `L_s` states. To encode
//! `s` from state `x`, the low bits of `x` are emitted until `x` falls into
//! `[L_s, 2 L_s)`; the reduced value `x'` then selects the `(x' - L_s)`-th
//! state owned by `s` as the next state.

mod bitstream;
mod coder;
mod spread;

pub use bitstream::{BitReader, Bitstream};
pub use coder::{decode, encode, DecodeEntry, TansCoder};
pub use spread::{
    build_spread, inverse_log_table, preferred_position, spread_fast, spread_tuned_bucketed,
    spread_tuned_iterated, spread_tuned_sorted, SpreadKind, SpreadTable,
};

/// Bits emitted when encoding a symbol with `count` states from `state`: the
/// unique `b` with `state >> b` in `[count, 2 count)`.
#[inline]
pub fn emitted_bits(state: u32, count: u32) -> u32 {
    let b = state.ilog2() - count.ilog2();
    if (state >> b) < count {
        b - 1
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emitted_bits_brute_force() {
        for log_states in 0..8u32 {
            let l = 1u32 << log_states;
            for count in 1..=l {
                for x in l..2 * l {
                    let b = emitted_bits(x, count);
                    assert!(
                        (count..2 * count).contains(&(x >> b)),
                        "x={x} count={count}"
                    );
                }
            }
        }
    }
}
