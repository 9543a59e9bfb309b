//! Item streams flowing between pipeline stages.

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::phy::BlockError;

/// One complex baseband sample, unit-normalized on both rails.
pub type Sample = Complex64;

/// Sequence of complex samples.
pub type IqStream = Vec<Sample>;

/// Bits on the interposer bus occupied by one complex sample (int16 I + int16 Q).
pub const IQ_ITEM_BITS: u32 = 32;

/// Width of the interposer bus word.
pub const BUS_WORD_BITS: u32 = 32;

/// A stream of small unsigned symbols, each strictly below `2^width`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolStream {
    items: Vec<u8>,
    width: u8,
}

impl SymbolStream {
    pub fn new(items: Vec<u8>, width: u8) -> Result<Self, BlockError> {
        if !matches!(width, 1 | 2 | 4 | 8) {
            return Err(BlockError::BadWidth(width));
        }
        if width < 8 {
            if let Some(&bad) = items.iter().find(|&&v| v >> width != 0) {
                return Err(BlockError::SymbolTooWide { value: bad, width });
            }
        }
        Ok(Self { items, width })
    }

    pub fn bytes(bytes: Vec<u8>) -> Self {
        Self {
            items: bytes,
            width: 8,
        }
    }

    pub fn bits(items: Vec<u8>) -> Result<Self, BlockError> {
        Self::new(items, 1)
    }

    pub(crate) fn from_parts_unchecked(items: Vec<u8>, width: u8) -> Self {
        debug_assert!(width == 8 || items.iter().all(|&v| v >> width == 0));
        Self { items, width }
    }

    pub fn items(&self) -> &[u8] {
        &self.items
    }

    pub fn into_items(self) -> Vec<u8> {
        self.items
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Any stream that can sit at an inter-stage boundary.
#[derive(Clone, Debug, PartialEq)]
pub enum Stream {
    Symbols(SymbolStream),
    Iq(IqStream),
}

impl Stream {
    pub fn len(&self) -> usize {
        match self {
            Stream::Symbols(s) => s.len(),
            Stream::Iq(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bits per item at this boundary.
    pub fn item_bits(&self) -> u32 {
        match self {
            Stream::Symbols(s) => u32::from(s.width()),
            Stream::Iq(_) => IQ_ITEM_BITS,
        }
    }

    pub fn as_iq(&self) -> Option<&IqStream> {
        match self {
            Stream::Iq(s) => Some(s),
            Stream::Symbols(_) => None,
        }
    }

    pub fn into_iq(self) -> Option<IqStream> {
        match self {
            Stream::Iq(s) => Some(s),
            Stream::Symbols(_) => None,
        }
    }

    pub fn as_symbols(&self) -> Option<&SymbolStream> {
        match self {
            Stream::Symbols(s) => Some(s),
            Stream::Iq(_) => None,
        }
    }

    /// An empty stream of the same item type.
    pub fn empty_like(&self) -> Stream {
        match self {
            Stream::Symbols(s) => Stream::Symbols(SymbolStream::from_parts_unchecked(Vec::new(), s.width())),
            Stream::Iq(_) => Stream::Iq(Vec::new()),
        }
    }

    /// Items `[start, end)` as a new stream.
    pub fn slice(&self, start: usize, end: usize) -> Stream {
        match self {
            Stream::Symbols(s) => Stream::Symbols(SymbolStream::from_parts_unchecked(
                s.items()[start..end].to_vec(),
                s.width(),
            )),
            Stream::Iq(s) => Stream::Iq(s[start..end].to_vec()),
        }
    }

    /// Appends `other`, which must carry the same item type.
    pub fn extend(&mut self, other: Stream) {
        match (self, other) {
            (Stream::Symbols(a), Stream::Symbols(b)) => {
                debug_assert_eq!(a.width, b.width);
                a.items.extend(b.items);
            }
            (Stream::Iq(a), Stream::Iq(b)) => a.extend(b),
            _ => panic!("stream type mismatch on extend"),
        }
    }

    /// Exact bit-level equality; distinguishes `-0.0` from `0.0`.
    pub fn bit_identical(&self, other: &Stream) -> bool {
        match (self, other) {
            (Stream::Symbols(a), Stream::Symbols(b)) => a == b,
            (Stream::Iq(a), Stream::Iq(b)) => iq_bit_identical(a, b),
            _ => false,
        }
    }
}

/// Number of bus words needed to carry `items` items of `item_bits` each.
/// Narrow symbols are packed least-significant-first into 32-bit words.
pub fn words_for(items: usize, item_bits: u32) -> usize {
    let per_word = (BUS_WORD_BITS / item_bits) as usize;
    items.div_ceil(per_word)
}

/// Items carried by a full bus word at the given width.
pub fn items_per_word(item_bits: u32) -> usize {
    (BUS_WORD_BITS / item_bits) as usize
}

pub fn iq_bit_identical(a: &[Sample], b: &[Sample]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
}

/// SHA-256 over the little-endian IEEE-754 bits of every rail, I then Q.
pub fn iq_digest(samples: &[Sample]) -> String {
    let mut h = Sha256::new();
    for s in samples {
        h.update(s.re.to_le_bytes());
        h.update(s.im.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_oversized_symbols() {
        assert!(SymbolStream::new(vec![0, 1, 2], 1).is_err());
        assert!(SymbolStream::new(vec![3, 2], 2).is_ok());
        assert!(SymbolStream::new(vec![1], 3).is_err());
    }

    #[test]
    fn word_packing() {
        assert_eq!(words_for(0, 1), 0);
        assert_eq!(words_for(33, 1), 2);
        assert_eq!(words_for(8, 4), 1);
        assert_eq!(words_for(5, 8), 2);
        assert_eq!(words_for(7, 32), 7);
    }

    #[test]
    fn bit_identity_sees_signed_zero() {
        let a = vec![Sample::new(0.0, 0.0)];
        let b = vec![Sample::new(-0.0, 0.0)];
        assert!(!iq_bit_identical(&a, &b));
        assert!(iq_bit_identical(&a, &a.clone()));
    }
}
