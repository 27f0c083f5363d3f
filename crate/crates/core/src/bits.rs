use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("LENGTH_MISMATCH: {left} vs {right} bits")]
pub struct LengthMismatch {
    pub left: usize,
    pub right: usize,
}

/// Fixed-length bit vector viewed as a point of a Hamming space.
///
/// `Ord` must agree with lexicographic order of the bit sequence (bit 0
/// first); FDC tie-breaking relies on it.
pub trait BitString: Clone + Ord + Send + Sync {
    fn bit_len(&self) -> usize;
    fn bit(&self, i: usize) -> bool;
    fn flipped(&self, i: usize) -> Self;
    fn distance(&self, other: &Self) -> Result<u32, LengthMismatch>;
    fn label(&self) -> String;

    fn count_ones(&self) -> u32 {
        (0..self.bit_len()).filter(|&i| self.bit(i)).count() as u32
    }
}

/// A bitstring of at most 64 bits.
///
/// Bit `i` is stored at integer position `len - 1 - i`, so the backing word
/// read as an unsigned integer orders strings lexicographically. Enumerating
/// `0..2^n` through [`SmallBits::from_index`] visits the space in that order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmallBits {
    len: u8,
    word: u64,
}

impl SmallBits {
    pub const MAX_LEN: usize = 64;

    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(
            (1..=Self::MAX_LEN).contains(&len),
            "bit length {len} out of range"
        );
        let mask = if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        SmallBits {
            len: len as u8,
            word: index & mask,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::from_index(0, bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.word |= 1 << (s.len as usize - 1 - i);
            }
        }
        s
    }

    pub fn index(&self) -> u64 {
        self.word
    }
}

impl BitString for SmallBits {
    fn bit_len(&self) -> usize {
        self.len as usize
    }

    fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.len as usize);
        (self.word >> (self.len as usize - 1 - i)) & 1 == 1
    }

    fn flipped(&self, i: usize) -> Self {
        debug_assert!(i < self.len as usize);
        SmallBits {
            len: self.len,
            word: self.word ^ (1 << (self.len as usize - 1 - i)),
        }
    }

    fn distance(&self, other: &Self) -> Result<u32, LengthMismatch> {
        if self.len != other.len {
            return Err(LengthMismatch {
                left: self.len as usize,
                right: other.len as usize,
            });
        }
        Ok((self.word ^ other.word).count_ones())
    }

    fn label(&self) -> String {
        (0..self.bit_len())
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }

    fn count_ones(&self) -> u32 {
        self.word.count_ones()
    }
}

impl fmt::Debug for SmallBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmallBits({})", self.label())
    }
}

/// Hamming distance between two plain boolean slices.
pub fn hamming_slices(a: &[bool], b: &[bool]) -> Result<u32, LengthMismatch> {
    if a.len() != b.len() {
        return Err(LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_order_is_lexicographic() {
        let a = SmallBits::from_bits(&[false, true, true]);
        let b = SmallBits::from_bits(&[true, false, false]);
        assert!(a < b);
        assert_eq!(a.index(), 0b011);
        assert_eq!(a.label(), "011");
    }

    #[test]
    fn flip_and_distance() {
        let a = SmallBits::from_index(0, 10);
        let b = a.flipped(3).flipped(7);
        assert_eq!(a.distance(&b), Ok(2));
        assert!(b.bit(3) && b.bit(7) && !b.bit(0));
        let c = SmallBits::from_index(0, 9);
        assert_eq!(a.distance(&c), Err(LengthMismatch { left: 10, right: 9 }));
    }

    #[test]
    fn slice_hamming() {
        assert_eq!(hamming_slices(&[true, false], &[false, false]), Ok(1));
        assert!(hamming_slices(&[true], &[true, false]).is_err());
    }
}
