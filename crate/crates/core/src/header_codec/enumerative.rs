use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{compositions, lower_column_in_place, CompositionModel};
use crate::error::{Error, Result};
use crate::quantizer::CountVector;

/// Rank of a composition among all compositions of its total.
///
/// `code(Q_s .. Q_1) = code(Q_{s-1} .. Q_1) + Σ_{i < Q_s} n(s-1, k-i)`, so
/// ranks follow lexicographic order of `(Q_D, Q_{D-1}, ..., Q_1)`.
pub fn enum_encode(counts: &CountVector) -> BigUint {
    let model = CompositionModel {
        alphabet: counts.len(),
        total: counts.total(),
    };
    let mut index = BigUint::zero();
    let mut k = counts.total();
    let mut col = model.column(counts.len());
    for s in (2..=counts.len()).rev() {
        col.truncate(k as usize + 1);
        lower_column_in_place(&mut col);
        // `col` is now n(s-1, 0..=k)
        let q = counts[s - 1];
        for i in 0..q {
            index += &col[(k - i) as usize];
        }
        k -= q;
    }
    index
}

/// Inverse of [`enum_encode`].
pub fn enum_decode(index: &BigUint, alphabet: usize, total: u32) -> Result<CountVector> {
    let model = CompositionModel::new(alphabet, total)?;
    let n = compositions(alphabet, total);
    if index >= &n {
        return Err(Error::IndexOutOfRange(format!(
            "index has {} bits, must be below n({alphabet}, {total})",
            index.bits()
        )));
    }
    let mut rest = index.clone();
    let mut counts = vec![0u32; alphabet];
    let mut k = total;
    let mut col = model.column(alphabet);
    for s in (2..=alphabet).rev() {
        col.truncate(k as usize + 1);
        lower_column_in_place(&mut col);
        let mut q = 0;
        while q < k && rest >= col[(k - q) as usize] {
            rest -= &col[(k - q) as usize];
            q += 1;
        }
        counts[s - 1] = q;
        k -= q;
    }
    counts[0] = k;
    debug_assert!(rest.is_zero());
    CountVector::with_total(counts, total)
}

/// Bits needed to store any rank: `⌈lg n(D, K)⌉`.
pub fn enum_index_bits(alphabet: usize, total: u32) -> Result<u64> {
    let n = super::count_compositions(alphabet, total)?;
    Ok((n - BigUint::one()).bits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::header_codec::count_compositions;
    use num_traits::ToPrimitive;

    /// All compositions of `total` into `parts`, in lexicographic order of
    /// the reversed vector (last coordinate most significant).
    fn all_compositions(parts: usize, total: u32) -> Vec<Vec<u32>> {
        fn rec(parts: usize, total: u32, suffix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if parts == 1 {
                let mut v = vec![total];
                v.extend(suffix.iter().rev());
                out.push(v);
                return;
            }
            for q in 0..=total {
                suffix.push(q);
                rec(parts - 1, total - q, suffix, out);
                suffix.pop();
            }
        }
        let mut out = Vec::new();
        rec(parts, total, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn two_symbol_ranks() {
        let rank = |c: Vec<u32>| enum_encode(&CountVector::new(c).unwrap()).to_u64().unwrap();
        // counts[0] = Q_1, counts[1] = Q_2
        assert_eq!(rank(vec![2, 0]), 0);
        assert_eq!(rank(vec![1, 1]), 1);
        assert_eq!(rank(vec![0, 2]), 2);
    }

    #[test]
    fn single_symbol() {
        for k in [0, 1, 9, 2048] {
            let c = CountVector::new(vec![k]).unwrap();
            assert!(enum_encode(&c).is_zero());
            assert_eq!(enum_decode(&BigUint::zero(), 1, k).unwrap(), c);
        }
    }

    #[test]
    fn exhaustive_small() {
        for d in 1..=4 {
            for k in 0..=8 {
                let all = all_compositions(d, k);
                assert_eq!(BigUint::from(all.len()), count_compositions(d, k).unwrap());
                for (rank, c) in all.into_iter().enumerate() {
                    let cv = CountVector::with_total(c, k).unwrap();
                    let idx = enum_encode(&cv);
                    assert_eq!(idx, BigUint::from(rank), "d={d} k={k} {cv:?}");
                    assert_eq!(enum_decode(&idx, d, k).unwrap(), cv);
                }
            }
        }
        assert_eq!(all_compositions(4, 8).len(), 165);
    }

    #[test]
    fn out_of_range_index() {
        assert!(enum_decode(&BigUint::from(165u32), 4, 8).is_err());
        assert!(enum_decode(&BigUint::from(164u32), 4, 8).is_ok());
    }

    #[test]
    fn index_bits() {
        assert_eq!(enum_index_bits(1, 10).unwrap(), 0);
        assert_eq!(enum_index_bits(2, 1).unwrap(), 1);
        assert_eq!(enum_index_bits(4, 8).unwrap(), 8); // 165
        assert_eq!(enum_index_bits(256, 2048).unwrap(), 1152);
    }

    #[test]
    fn large_roundtrip() {
        let p = crate::probmodel::random_simplex(256, 11).unwrap();
        let q = crate::quantizer::quantize(&p, 2048, 1.0).unwrap();
        let idx = enum_encode(&q);
        assert!(idx.bits() <= enum_index_bits(256, 2048).unwrap());
        assert_eq!(enum_decode(&idx, 256, 2048).unwrap(), q);
    }
}
