//! Bit-level blocks: splitter, PN9 whitening, clock walk and differential encoding.

use serde::{Deserialize, Serialize};

use super::BlockError;
use crate::stream::SymbolStream;

/// Default PN9 seed: all nine register bits set.
pub const PN9_DEFAULT_SEED: u16 = 0x1ff;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    Bits,
    Nibbles,
}

impl SplitMode {
    pub fn symbol_width(self) -> u8 {
        match self {
            SplitMode::Bits => 1,
            SplitMode::Nibbles => 4,
        }
    }

    pub fn symbols_per_byte(self) -> usize {
        8 / usize::from(self.symbol_width())
    }
}

/// Splits bytes into symbols, least-significant symbol first.
pub fn splitter(bytes: &[u8], mode: SplitMode) -> SymbolStream {
    let width = mode.symbol_width();
    let mask = (1u8 << width) - 1;
    let per = mode.symbols_per_byte();
    let mut out = Vec::with_capacity(bytes.len() * per);
    for &b in bytes {
        for k in 0..per {
            out.push((b >> (k as u8 * width)) & mask);
        }
    }
    SymbolStream::from_parts_unchecked(out, width)
}

/// 9-bit Fibonacci LFSR for x^9 + x^5 + 1. The output bit is bit 0 of the register.
#[derive(Clone, Debug)]
pub struct Pn9 {
    state: u16,
}

impl Pn9 {
    pub fn new(seed: u16) -> Result<Self, BlockError> {
        if seed & 0x1ff == 0 || seed > 0x1ff {
            return Err(BlockError::BadPn9Seed(seed));
        }
        Ok(Self { state: seed })
    }

    pub fn next_bit(&mut self) -> u8 {
        let out = (self.state & 1) as u8;
        let feedback = (self.state ^ (self.state >> 5)) & 1;
        self.state = (self.state >> 1) | (feedback << 8);
        out
    }
}

impl Iterator for Pn9 {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        Some(self.next_bit())
    }
}

/// XORs a bit stream with the PN9 whitening sequence.
pub fn pn9(symbols: &SymbolStream, seed: u16) -> Result<SymbolStream, BlockError> {
    expect_width(symbols, 1)?;
    let lfsr = Pn9::new(seed)?;
    let out = symbols.items().iter().zip(lfsr).map(|(&b, w)| b ^ w).collect();
    Ok(SymbolStream::from_parts_unchecked(out, 1))
}

/// Quadrant walk: a 1 bit steps counterclockwise (+1 mod 4), a 0 bit clockwise.
/// Emits the new position for every input bit.
pub fn clock_walk(bits: &SymbolStream, start: u8) -> Result<SymbolStream, BlockError> {
    expect_width(bits, 1)?;
    if start > 3 {
        return Err(BlockError::BadClockStart(start));
    }
    let out = bits
        .items()
        .iter()
        .scan(start, |pos, &b| {
            *pos = if b == 1 { (*pos + 1) & 3 } else { (*pos + 3) & 3 };
            Some(*pos)
        })
        .collect();
    Ok(SymbolStream::from_parts_unchecked(out, 2))
}

/// Differential encoder, `e[n] = r[n] ^ e[n-1]` with `e[-1] = 0`.
pub fn diffenc(bits: &SymbolStream) -> Result<SymbolStream, BlockError> {
    expect_width(bits, 1)?;
    let out = bits
        .items()
        .iter()
        .scan(0u8, |prev, &b| {
            *prev ^= b;
            Some(*prev)
        })
        .collect();
    Ok(SymbolStream::from_parts_unchecked(out, 1))
}

/// Inverse of [`diffenc`].
pub fn diffdec(bits: &SymbolStream) -> Result<SymbolStream, BlockError> {
    expect_width(bits, 1)?;
    let mut prev = 0u8;
    let out = bits
        .items()
        .iter()
        .map(|&e| {
            let r = e ^ prev;
            prev = e;
            r
        })
        .collect();
    Ok(SymbolStream::from_parts_unchecked(out, 1))
}

pub(crate) fn expect_width(s: &SymbolStream, width: u8) -> Result<(), BlockError> {
    if s.width() != width {
        return Err(BlockError::WidthMismatch {
            expected: width,
            found: s.width(),
        });
    }
    Ok(())
}
