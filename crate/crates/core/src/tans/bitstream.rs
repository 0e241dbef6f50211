use crate::error::{Error, Result};

/// A stack of bits.
///
/// Bits are packed most-significant-first into bytes and the last partial
/// byte is zero-padded. Readers consume from the end, so the first bits read
/// are the last ones written.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bitstream {
    bytes: Vec<u8>,
    len: u64,
}

impl Bitstream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bytes(bytes: Vec<u8>, len_bits: u64) -> Result<Self> {
        if bytes.len() as u64 != len_bits.div_ceil(8) {
            return Err(Error::Decode(format!(
                "{len_bits} bits do not fit {} bytes",
                bytes.len()
            )));
        }
        let used = (len_bits % 8) as u32;
        if used != 0 && bytes.last().is_some_and(|&b| b & (0xff >> used) != 0) {
            return Err(Error::Decode("nonzero padding bits".into()));
        }
        Ok(Self {
            bytes,
            len: len_bits,
        })
    }

    #[inline]
    pub fn len_bits(&self) -> u64 {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// Appends the low `n` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 64);
        for k in (0..n).rev() {
            let bit = (value >> k) & 1;
            let offset = (self.len % 8) as u32;
            if offset == 0 {
                self.bytes.push(0);
            }
            if bit != 0 {
                *self.bytes.last_mut().expect("byte pushed") |= 0x80 >> offset;
            }
            self.len += 1;
        }
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader {
            bytes: &self.bytes,
            remaining: self.len,
        }
    }
}

/// Pops bits from the end of a [`Bitstream`].
#[derive(Clone, Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    remaining: u64,
}

impl BitReader<'_> {
    #[inline]
    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    /// Reads the last `n` unread bits as an integer, undoing one
    /// [`Bitstream::push_bits`].
    pub fn pop_bits(&mut self, n: u32) -> Result<u64> {
        if u64::from(n) > self.remaining {
            return Err(Error::Decode(format!(
                "bitstream underflow: need {n} bits, {} left",
                self.remaining
            )));
        }
        let mut value = 0u64;
        for k in 0..n {
            self.remaining -= 1;
            let pos = self.remaining;
            let bit = (self.bytes[(pos / 8) as usize] >> (7 - pos % 8)) & 1;
            value |= u64::from(bit) << k;
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn packs_msb_first() {
        let mut b = Bitstream::new();
        b.push_bits(0b101, 3);
        b.push_bits(0b11, 2);
        assert_eq!(b.as_bytes(), &[0b1011_1000]);
        assert_eq!(b.len_bits(), 5);
        let mut r = b.reader();
        assert_eq!(r.pop_bits(2).unwrap(), 0b11);
        assert_eq!(r.pop_bits(3).unwrap(), 0b101);
        assert!(r.pop_bits(1).is_err());
    }

    #[test]
    fn from_bytes_validation() {
        assert!(Bitstream::from_bytes(vec![0b1011_1000], 5).is_ok());
        assert!(Bitstream::from_bytes(vec![0b1011_1001], 5).is_err());
        assert!(Bitstream::from_bytes(vec![0, 0], 5).is_err());
        assert!(Bitstream::from_bytes(vec![], 0).is_ok());
    }

    proptest! {
        #[test]
        fn lifo(chunks in prop::collection::vec((any::<u64>(), 0u32..=64), 0..50)) {
            let mut b = Bitstream::new();
            for &(v, n) in &chunks {
                b.push_bits(v, n);
            }
            let b = Bitstream::from_bytes(b.as_bytes().to_vec(), b.len_bits()).unwrap();
            let mut r = b.reader();
            for &(v, n) in chunks.iter().rev() {
                let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                prop_assert_eq!(r.pop_bits(n).unwrap(), v & mask);
            }
            prop_assert_eq!(r.remaining(), 0);
        }
    }
}
