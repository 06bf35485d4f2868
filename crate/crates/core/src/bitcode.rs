//! Bit-packed binary codes.
//!
//! Bit `i` of a code lives in word `i / 64` at position `i % 64`. A `+1`
//! activation maps to bit 1 and `-1` to bit 0. Padding bits past `n_bits` are
//! always zero.

use std::fmt;

use crate::error::{ensure, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitcode {
    n_bits: usize,
    words: Vec<u64>,
}

pub fn words_for(n_bits: usize) -> usize {
    n_bits.div_ceil(64)
}

impl Bitcode {
    pub fn zeros(n_bits: usize) -> Self {
        Self {
            n_bits,
            words: vec![0; words_for(n_bits)],
        }
    }

    /// Packs a `±1` (or any real) vector: entries `>= 0` become bit 1.
    pub fn from_signs(values: &[f64]) -> Self {
        let mut code = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            if v >= 0.0 {
                code.words[i / 64] |= 1 << (i % 64);
            }
        }
        code
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut code = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                code.words[i / 64] |= 1 << (i % 64);
            }
        }
        code
    }

    /// Builds a code from raw words, rejecting nonzero padding.
    pub fn from_words(n_bits: usize, words: Vec<u64>) -> Result<Self> {
        ensure!(
            words.len() == words_for(n_bits),
            InvalidInput,
            "{} words cannot hold exactly {} bits",
            words.len(),
            n_bits
        );
        if !n_bits.is_multiple_of(64) {
            let mask = !0u64 << (n_bits % 64);
            ensure!(
                words.last().is_none_or(|w| w & mask == 0),
                InvalidInput,
                "padding bits beyond bit {n_bits} must be zero"
            );
        }
        Ok(Self { n_bits, words })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.n_bits, "bit index {i} out of range");
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// `+1.0` for set bits, `-1.0` otherwise.
    pub fn to_signs(&self) -> Vec<f64> {
        (0..self.n_bits)
            .map(|i| if self.bit(i) { 1.0 } else { -1.0 })
            .collect()
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }
}

/// Bits in index order, `1` for `+1`.
impl fmt::Display for Bitcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n_bits {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bitcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitcode({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sign_convention() {
        let c = Bitcode::from_signs(&[1.0, -1.0, 0.0, -0.5]);
        assert_eq!(format!("{c:?}"), "Bitcode(1010)");
        assert_eq!(c.to_string(), "1010");
        assert_eq!(c.to_signs(), vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(c.words(), &[0b0101]);
    }

    #[test]
    fn rejects_dirty_padding() {
        assert!(Bitcode::from_words(3, vec![0b1000]).is_err());
        assert!(Bitcode::from_words(3, vec![0b0111]).is_ok());
        assert!(Bitcode::from_words(64, vec![u64::MAX]).is_ok());
        assert!(Bitcode::from_words(65, vec![0]).is_err());
    }

    proptest! {
        #[test]
        fn pack_unpack_roundtrip(bits in prop::collection::vec(any::<bool>(), 1..300)) {
            let code = Bitcode::from_bools(&bits);
            let again = Bitcode::from_words(code.n_bits(), code.words().to_vec()).unwrap();
            prop_assert_eq!(&again, &code);
            prop_assert_eq!(Bitcode::from_signs(&code.to_signs()), code.clone());
            prop_assert_eq!(code.count_ones() as usize, bits.iter().filter(|b| **b).count());
        }
    }
}
