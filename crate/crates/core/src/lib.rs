//! Quantization and compact encoding of probability distributions for
//! Asymmetric Numeral Systems entropy coders.
//!
//! The pipeline: a source distribution is quantized to a composition of `K`
//! ([`quantizer`]), the composition is stored as a header ([`header_codec`]),
//! the decoder reconstructs a distribution, quantizes it again to the `L`
//! states of a tANS automaton and spreads symbols over those states
//! ([`tans`]). [`automaton`] computes the exact bits/symbol such an automaton
//! spends on an i.i.d. source.

pub mod automaton;
pub mod bench;
pub mod cli;
pub mod error;
pub mod header_codec;
pub mod probmodel;
pub mod quantizer;
pub mod tans;

pub use error::{Error, Result};
