//! Headers carrying a [`CountVector`].
//!
//! A composition of `K` into `D` parts is one of
//! `n(D, K) = C(K + D - 1, D - 1)` possibilities, so `lg n(D, K)` bits is the
//! cost of a header under a uniform prior. Two coders are provided:
//!
//! * [`enum_encode`] / [`enum_decode`]: exact enumerative ranking with big
//!   integers; reaches the bound exactly and serves as the reference.
//! * [`stream_encode_header`] / [`stream_decode_header`]: an rANS coder fed
//!   with the conditional count model `Pr(Q_s = i | s, k) = n(s-1, k-i) / n(s, k)`,
//!   which needs no big-integer arithmetic in the coder itself.
//!
//! Throughout, coordinate `s` (1-based) is `counts[s - 1]` and `k` is the sum
//! of coordinates `1..=s`.

mod enumerative;
mod stream;

pub use enumerative::{enum_decode, enum_encode, enum_index_bits};
pub use stream::{
    stream_decode_header, stream_encode_header, HeaderBytes, MAX_STREAM_TOTAL, PROB_BITS,
};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::probmodel::binary_entropy;

/// Composition counts `n(s, k)` for `s <= alphabet`, `k <= total`.
///
/// Columns `n(s, 0..=K)` are produced on demand rather than stored: at
/// `D = 256, K = 2048` the full table would hold half a million integers of
/// over a thousand bits each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositionModel {
    alphabet: usize,
    total: u32,
}

impl CompositionModel {
    pub fn new(alphabet: usize, total: u32) -> Result<Self> {
        if alphabet == 0 {
            return Err(Error::InvalidArgument("alphabet must be >= 1".into()));
        }
        Ok(Self { alphabet, total })
    }

    #[inline]
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    #[inline]
    pub fn total(&self) -> u32 {
        self.total
    }

    /// `n(s, k) = C(k + s - 1, s - 1)`; `n(0, 0) = 1` and `n(0, k) = 0` otherwise.
    pub fn count(&self, s: usize, k: u32) -> BigUint {
        compositions(s, k)
    }

    /// `n(s, k)` for `k = 0..=total`.
    pub fn column(&self, s: usize) -> Vec<BigUint> {
        column(s, self.total)
    }

    /// Columns `s = alphabet, alphabet - 1, ..., 1`, each derived from the
    /// previous one by differencing: `n(s-1, k) = n(s, k) - n(s, k-1)`.
    pub fn columns_desc(&self) -> ColumnsDesc {
        ColumnsDesc {
            next: Some(self.column(self.alphabet)),
            s: self.alphabet,
        }
    }
}

pub struct ColumnsDesc {
    next: Option<Vec<BigUint>>,
    s: usize,
}

impl Iterator for ColumnsDesc {
    /// `(s, n(s, 0..=K))`
    type Item = (usize, Vec<BigUint>);

    fn next(&mut self) -> Option<Self::Item> {
        let col = self.next.take()?;
        let s = self.s;
        if s > 1 {
            let mut lower = col.clone();
            lower_column_in_place(&mut lower);
            self.next = Some(lower);
            self.s -= 1;
        }
        Some((s, col))
    }
}

/// Turns column `n(s, ·)` into `n(s-1, ·)` without reallocating.
pub(crate) fn lower_column_in_place(col: &mut [BigUint]) {
    for k in (1..col.len()).rev() {
        let (head, tail) = col.split_at_mut(k);
        tail[0] -= &head[k - 1];
    }
}

fn column(s: usize, total: u32) -> Vec<BigUint> {
    let mut col = Vec::with_capacity(total as usize + 1);
    if s == 0 {
        col.push(BigUint::one());
        col.resize(total as usize + 1, BigUint::zero());
        return col;
    }
    // n(s, k) = n(s, k-1) * (k + s - 1) / k
    let mut cur = BigUint::one();
    col.push(cur.clone());
    for k in 1..=u64::from(total) {
        cur = cur * (k + s as u64 - 1) / k;
        col.push(cur.clone());
    }
    col
}

fn compositions(s: usize, k: u32) -> BigUint {
    if s == 0 {
        return if k == 0 {
            BigUint::one()
        } else {
            BigUint::zero()
        };
    }
    let n = u64::from(k) + s as u64 - 1;
    num_integer::binomial(BigUint::from(n), BigUint::from(s as u64 - 1))
}

/// Number of compositions of `total` into `alphabet` parts.
pub fn count_compositions(alphabet: usize, total: u32) -> Result<BigUint> {
    if alphabet == 0 {
        return Err(Error::InvalidArgument("alphabet must be >= 1".into()));
    }
    Ok(compositions(alphabet, total))
}

/// Base-2 logarithm of a big natural, accurate to f64 precision.
pub fn lg_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().map_or(f64::NEG_INFINITY, |v| (v as f64).log2());
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("64 significant bits");
    (top as f64).log2() + shift as f64
}

/// Header size bounds in bits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeaderCost {
    /// `lg n(D, K)`.
    pub exact: f64,
    /// `(K + D - 1) h((D - 1) / (K + D - 1))`, never below `exact`.
    pub estimate: f64,
}

pub fn header_cost_bits(alphabet: usize, total: u32) -> Result<HeaderCost> {
    let n = count_compositions(alphabet, total)?;
    let slots = f64::from(total) + alphabet as f64 - 1.0;
    let estimate = if slots > 0.0 {
        slots * binary_entropy((alphabet as f64 - 1.0) / slots)
    } else {
        0.0
    };
    Ok(HeaderCost {
        exact: lg_big(&n),
        estimate,
    })
}

/// `Pr(Q_s = i | s, k) = n(s-1, k-i) / n(s, k)` for `s >= 2`, as an exact
/// reduced fraction.
pub fn conditional_probability(s: usize, k: u32, i: u32) -> Result<Ratio<BigUint>> {
    if s < 2 {
        return Err(Error::IndexOutOfRange(format!(
            "coordinate {s} < 2 is forced"
        )));
    }
    if i > k {
        return Err(Error::IndexOutOfRange(format!(
            "count {i} exceeds remaining sum {k}"
        )));
    }
    Ok(Ratio::new(compositions(s - 1, k - i), compositions(s, k)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_counts() {
        for k in 0..20 {
            assert_eq!(count_compositions(1, k).unwrap(), BigUint::one());
        }
        assert_eq!(count_compositions(3, 2).unwrap(), BigUint::from(6u32));
        assert!(count_compositions(0, 2).is_err());

        let n = count_compositions(256, 2048).unwrap();
        // lg C(2303, 255), mpmath
        assert!(
            (lg_big(&n) - 1_151.096_016_607_976).abs() < 1e-9,
            "{}",
            lg_big(&n)
        );
    }

    #[test]
    fn recurrence_holds() {
        let model = CompositionModel::new(9, 15).unwrap();
        for s in 2..=9 {
            for k in 0..=15u32 {
                let sum: BigUint = (0..=k).map(|i| model.count(s - 1, k - i)).sum();
                assert_eq!(sum, model.count(s, k));
            }
        }
    }

    #[test]
    fn columns_match_binomials() {
        let model = CompositionModel::new(12, 30).unwrap();
        let mut seen = 0;
        for (s, col) in model.columns_desc() {
            assert_eq!(col, model.column(s));
            for (k, v) in col.iter().enumerate() {
                assert_eq!(v, &model.count(s, k as u32));
            }
            seen += 1;
        }
        assert_eq!(seen, 12);
        assert_eq!(model.column(0)[0], BigUint::one());
    }

    #[test]
    fn header_cost_examples() {
        let one = header_cost_bits(1, 77).unwrap();
        assert_eq!((one.exact, one.estimate), (0.0, 0.0));

        let big = header_cost_bits(256, 2048).unwrap();
        // mpmath: 1151.0960 and 1156.3348
        assert!((big.exact - 1_151.096_016_607_976).abs() < 1e-9);
        assert!((big.estimate - 1_156.334_770_011_914_6).abs() < 1e-9);
        assert!(big.exact <= big.estimate && big.estimate <= 1.01 * big.exact);

        let sq = header_cost_bits(256, 256).unwrap();
        assert!(
            (sq.exact - 506.173_547_494_773_8).abs() < 1e-9,
            "{}",
            sq.exact
        );
    }

    #[test]
    fn conditional_examples() {
        let third = Ratio::new(BigUint::one(), BigUint::from(3u32));
        for i in 0..=2 {
            assert_eq!(conditional_probability(2, 2, i).unwrap(), third);
        }
        assert_eq!(
            conditional_probability(7, 0, 0).unwrap(),
            Ratio::from_integer(BigUint::one())
        );
        let sixths: Vec<_> = (0..=2)
            .map(|i| conditional_probability(3, 2, i).unwrap())
            .collect();
        assert_eq!(
            sixths,
            [3u32, 2, 1].map(|n| Ratio::new(BigUint::from(n), BigUint::from(6u32)))
        );
        assert!(conditional_probability(1, 2, 0).is_err());
        assert!(conditional_probability(3, 2, 3).is_err());
    }

    #[test]
    fn conditional_sums_to_one() {
        for s in 2..=64 {
            for k in 0..=64 {
                let sum = (0..=k)
                    .map(|i| conditional_probability(s, k, i).unwrap())
                    .fold(Ratio::from_integer(BigUint::zero()), |a, b| a + b);
                assert!(sum.is_one(), "s={s} k={k}");
            }
        }
    }
}
