//! The nine unified accelerator blocks.
//!
//! Every block is a pure function of its input stream and parameters. These
//! are the "hardware" implementations; the chunked, stateful software
//! equivalents live in [`crate::hybrid::software`].

mod bits;
mod chip;
mod fir;
mod mapper;
mod resample;

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bits::{clock_walk, diffdec, diffenc, pn9, splitter, Pn9, SplitMode, PN9_DEFAULT_SEED};
pub use chip::{chip_map, ChipTable};
pub use fir::{fir41, Taps, FIR_TAPS};
pub use mapper::{mapper, Constellation, QUADRANT_POINTS};
pub use resample::{offset_q, zpad};

use crate::stream::{Stream, SymbolStream, IQ_ITEM_BITS};

#[derive(Debug, Error)]
pub enum BlockError {
    #[error("symbol width {0} not supported (expected 1, 2, 4 or 8)")]
    BadWidth(u8),
    #[error("symbol value {value} does not fit in {width} bits")]
    SymbolTooWide { value: u8, width: u8 },
    #[error("expected {expected}-bit symbols, found {found}-bit")]
    WidthMismatch { expected: u8, found: u8 },
    #[error("block expects a symbol stream but received IQ samples")]
    ExpectedSymbols,
    #[error("block expects IQ samples but received a symbol stream")]
    ExpectedIq,
    #[error("PN9 seed {0:#x} invalid (must be a non-zero 9-bit value)")]
    BadPn9Seed(u16),
    #[error("clock start symbol {0} out of range 0..=3")]
    BadClockStart(u8),
    #[error("symbol {symbol} outside chip table of {symbols} entries")]
    SymbolOutsideTable { symbol: u8, symbols: usize },
    #[error("chip table {name}: {reason}")]
    BadChipTable { name: String, reason: String },
    #[error("O-QPSK interleave needs an even chip count, got {0}")]
    OddChipCount(usize),
    #[error("mapper hold must be at least 1")]
    ZeroHold,
    #[error("FIR needs exactly 41 taps, got {0}")]
    TapCount(usize),
    #[error("FIR tap is not finite")]
    NonFiniteTap,
    #[error("cannot parse tap value {0:?}")]
    BadTapValue(String),
    #[error("zero-pad period M must be at least 1")]
    ZeroPadPeriod,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The nine block kinds, in unified pipeline order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Splitter,
    Pn9,
    Clock,
    Diffenc,
    Chip,
    Mapper,
    Fir,
    Zpad,
    Offset,
}

impl BlockKind {
    pub const ALL: [BlockKind; 9] = [
        BlockKind::Splitter,
        BlockKind::Pn9,
        BlockKind::Clock,
        BlockKind::Diffenc,
        BlockKind::Chip,
        BlockKind::Mapper,
        BlockKind::Fir,
        BlockKind::Zpad,
        BlockKind::Offset,
    ];

    /// Zero-based position in the unified pipeline.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Splitter => "splitter",
            BlockKind::Pn9 => "pn9",
            BlockKind::Clock => "clock",
            BlockKind::Diffenc => "diffenc",
            BlockKind::Chip => "chip",
            BlockKind::Mapper => "mapper",
            BlockKind::Fir => "fir",
            BlockKind::Zpad => "zpad",
            BlockKind::Offset => "offset",
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlockKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown block kind {s:?}"))
    }
}

/// Kind-specific parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockParams {
    Splitter { mode: SplitMode },
    Pn9 { seed: u16 },
    Clock { start: u8 },
    Diffenc,
    Chip { table: ChipTable },
    Mapper { constellation: Constellation, hold: usize },
    Fir { taps: Taps, flush_tail: bool },
    Zpad { zeros: usize, every: usize },
    Offset { delay: usize },
}

impl BlockParams {
    pub fn kind(&self) -> BlockKind {
        match self {
            BlockParams::Splitter { .. } => BlockKind::Splitter,
            BlockParams::Pn9 { .. } => BlockKind::Pn9,
            BlockParams::Clock { .. } => BlockKind::Clock,
            BlockParams::Diffenc => BlockKind::Diffenc,
            BlockParams::Chip { .. } => BlockKind::Chip,
            BlockParams::Mapper { .. } => BlockKind::Mapper,
            BlockParams::Fir { .. } => BlockKind::Fir,
            BlockParams::Zpad { .. } => BlockKind::Zpad,
            BlockParams::Offset { .. } => BlockKind::Offset,
        }
    }

    fn validate(&self) -> Result<(), BlockError> {
        match self {
            BlockParams::Pn9 { seed } => Pn9::new(*seed).map(|_| ()),
            BlockParams::Clock { start } if *start > 3 => Err(BlockError::BadClockStart(*start)),
            BlockParams::Mapper { hold: 0, .. } => Err(BlockError::ZeroHold),
            BlockParams::Fir { taps, .. } if taps.coeffs().len() != FIR_TAPS => {
                Err(BlockError::TapCount(taps.coeffs().len()))
            }
            BlockParams::Zpad { every: 0, .. } => Err(BlockError::ZeroPadPeriod),
            _ => Ok(()),
        }
    }
}

/// A configured block; a disabled block is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockConfig {
    params: BlockParams,
    enabled: bool,
}

impl BlockConfig {
    pub fn new(params: BlockParams, enabled: bool) -> Result<Self, BlockError> {
        params.validate()?;
        Ok(Self { params, enabled })
    }

    pub fn enabled(params: BlockParams) -> Result<Self, BlockError> {
        Self::new(params, true)
    }

    pub fn kind(&self) -> BlockKind {
        self.params.kind()
    }

    pub fn params(&self) -> &BlockParams {
        &self.params
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn set_enabled(&mut self, enabled: bool) {
        self.enabled = enabled;
    }

    /// Runs the block on a whole stream.
    pub fn apply(&self, input: Stream) -> Result<Stream, BlockError> {
        if !self.enabled {
            return Ok(input);
        }
        let symbols = |s: &Stream| s.as_symbols().cloned().ok_or(BlockError::ExpectedSymbols);
        let iq = |s: Stream| s.into_iq().ok_or(BlockError::ExpectedIq);
        Ok(match &self.params {
            BlockParams::Splitter { mode } => {
                let s = symbols(&input)?;
                bits::expect_width(&s, 8)?;
                Stream::Symbols(splitter(s.items(), *mode))
            }
            BlockParams::Pn9 { seed } => Stream::Symbols(pn9(&symbols(&input)?, *seed)?),
            BlockParams::Clock { start } => Stream::Symbols(clock_walk(&symbols(&input)?, *start)?),
            BlockParams::Diffenc => Stream::Symbols(diffenc(&symbols(&input)?)?),
            BlockParams::Chip { table } => Stream::Symbols(chip_map(&symbols(&input)?, table)?),
            BlockParams::Mapper { constellation, hold } => {
                Stream::Iq(mapper(&symbols(&input)?, *constellation, *hold)?)
            }
            BlockParams::Fir { taps, flush_tail } => Stream::Iq(fir41(&iq(input)?, taps, *flush_tail)),
            BlockParams::Zpad { zeros, every } => Stream::Iq(zpad(&iq(input)?, *zeros, *every)?),
            BlockParams::Offset { delay } => Stream::Iq(offset_q(&iq(input)?, *delay)),
        })
    }

    /// Declared items-out / items-in ratio (filter and offset tails excluded).
    pub fn rate(&self) -> Ratio<u64> {
        if !self.enabled {
            return Ratio::from_integer(1);
        }
        match &self.params {
            BlockParams::Splitter { mode } => Ratio::from_integer(mode.symbols_per_byte() as u64),
            BlockParams::Chip { table } => Ratio::from_integer(table.chips_per_symbol() as u64),
            BlockParams::Mapper { constellation, hold } => {
                Ratio::new(*hold as u64, constellation.symbols_per_point() as u64)
            }
            BlockParams::Zpad { zeros, every } => Ratio::new((*every + *zeros) as u64, *every as u64),
            BlockParams::Pn9 { .. }
            | BlockParams::Clock { .. }
            | BlockParams::Diffenc
            | BlockParams::Fir { .. }
            | BlockParams::Offset { .. } => Ratio::from_integer(1),
        }
    }

    /// Bits per item leaving this block, given the bits per item entering it.
    pub fn output_bits(&self, input_bits: u32) -> u32 {
        if !self.enabled {
            return input_bits;
        }
        match &self.params {
            BlockParams::Splitter { mode } => u32::from(mode.symbol_width()),
            BlockParams::Clock { .. } => 2,
            BlockParams::Chip { .. } => 1,
            BlockParams::Mapper { .. } => IQ_ITEM_BITS,
            _ => input_bits,
        }
    }
}

/// Convenience for tests and examples: a byte stream as a pipeline input.
pub fn byte_stream(bytes: &[u8]) -> Stream {
    Stream::Symbols(SymbolStream::bytes(bytes.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_kinds_in_order() {
        for (i, k) in BlockKind::ALL.iter().enumerate() {
            assert_eq!(k.index(), i);
            assert_eq!(BlockKind::from_index(i), Some(*k));
            assert_eq!(k.name().parse::<BlockKind>().unwrap(), *k);
        }
        assert_eq!(BlockKind::from_index(9), None);
    }

    #[test]
    fn params_validated() {
        assert!(BlockConfig::enabled(BlockParams::Pn9 { seed: 0 }).is_err());
        assert!(BlockConfig::enabled(BlockParams::Zpad { zeros: 1, every: 0 }).is_err());
        assert!(BlockConfig::enabled(BlockParams::Clock { start: 7 }).is_err());
        assert!(BlockConfig::enabled(BlockParams::Mapper {
            constellation: Constellation::Bipolar,
            hold: 0
        })
        .is_err());
    }

    #[test]
    fn disabled_block_passes_through() {
        let mut b = BlockConfig::enabled(BlockParams::Diffenc).unwrap();
        b.set_enabled(false);
        let input = Stream::Iq(vec![crate::stream::Sample::new(0.25, -0.5)]);
        assert_eq!(b.apply(input.clone()).unwrap(), input);
        assert_eq!(b.rate(), Ratio::from_integer(1));
        assert_eq!(b.output_bits(32), 32);
    }

    #[test]
    fn type_errors() {
        let fir = BlockConfig::enabled(BlockParams::Fir {
            taps: Taps::half_sine(),
            flush_tail: false,
        })
        .unwrap();
        assert!(matches!(fir.apply(byte_stream(&[1])), Err(BlockError::ExpectedIq)));
        let split = BlockConfig::enabled(BlockParams::Splitter { mode: SplitMode::Bits }).unwrap();
        assert!(matches!(split.apply(Stream::Iq(vec![])), Err(BlockError::ExpectedSymbols)));
    }
}
