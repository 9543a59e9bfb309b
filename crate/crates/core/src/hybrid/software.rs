//! Streaming software versions of the nine blocks.
//!
//! These are written independently of [`crate::phy`]: each keeps explicit
//! state across chunk boundaries and is fed one interposer read at a time.
//! Equivalence with the hardware blocks is checked bit-for-bit in tests.

use std::collections::VecDeque;

use crate::phy::{BlockConfig, BlockError, BlockKind, BlockParams, ChipTable, Constellation, SplitMode, Taps};
use crate::stream::{Sample, Stream, SymbolStream};

/// A stateful block processing a stream in arbitrary chunks.
pub trait SoftBlock: Send {
    fn kind(&self) -> BlockKind;
    fn push(&mut self, input: Stream) -> Result<Stream, BlockError>;
    /// Emits whatever the block still holds once the input is exhausted.
    fn finish(&mut self) -> Result<Stream, BlockError>;
}

fn symbols_in(input: Stream, width: u8) -> Result<Vec<u8>, BlockError> {
    match input {
        Stream::Symbols(s) if s.width() == width => Ok(s.into_items()),
        Stream::Symbols(s) => Err(BlockError::WidthMismatch {
            expected: width,
            found: s.width(),
        }),
        Stream::Iq(_) => Err(BlockError::ExpectedSymbols),
    }
}

fn iq_in(input: Stream) -> Result<Vec<Sample>, BlockError> {
    input.into_iq().ok_or(BlockError::ExpectedIq)
}

fn sym(items: Vec<u8>, width: u8) -> Stream {
    Stream::Symbols(SymbolStream::from_parts_unchecked(items, width))
}

struct SoftSplitter {
    mode: SplitMode,
}

impl SoftBlock for SoftSplitter {
    fn kind(&self) -> BlockKind {
        BlockKind::Splitter
    }

    fn push(&mut self, input: Stream) -> Result<Stream, BlockError> {
        let bytes = symbols_in(input, 8)?;
        let (width, count) = match self.mode {
            SplitMode::Bits => (1u8, 8u8),
            SplitMode::Nibbles => (4, 2),
        };
        let mask = (1u16 << width) as u8 - 1;
        let mut out = Vec::with_capacity(bytes.len() * count as usize);
        for b in bytes {
            let mut v = b;
            for _ in 0..count {
                out.push(v & mask);
                v = v.checked_shr(u32::from(width)).unwrap_or(0);
            }
        }
        Ok(sym(out, width))
    }

    fn finish(&mut self) -> Result<Stream, BlockError> {
        Ok(sym(Vec::new(), self.mode.symbol_width()))
    }
}

/// PN9 via the sequence recurrence s[n+9] = s[n] ^ s[n+5], seeded with the
/// register bits least-significant first.
struct SoftPn9 {
    window: VecDeque<u8>,
}

impl SoftPn9 {
    fn new(seed: u16) -> Result<Self, BlockError> {
        if seed == 0 || seed > 0x1ff {
            return Err(BlockError::BadPn9Seed(seed));
        }
        Ok(Self {
            window: (0..9).map(|i| ((seed >> i) & 1) as u8).collect(),
        })
    }

    fn next(&mut self) -> u8 {
        let b = self.window[0];
        let fresh = self.window[0] ^ self.window[5];
        self.window.pop_front();
        self.window.push_back(fresh);
        b
    }
}

impl SoftBlock for SoftPn9 {
    fn kind(&self) -> BlockKind {
        BlockKind::Pn9
    }

    fn push(&mut self, input: Stream) -> Result<Stream, BlockError> {
        let bits = symbols_in(input, 1)?;
        Ok(sym(bits.into_iter().map(|b| b ^ self.next()).collect(), 1))
    }

    fn finish(&mut self) -> Result<Stream, BlockError> {
        Ok(sym(Vec::new(), 1))
    }
}

struct SoftClock {
    state: u8,
}

impl SoftBlock for SoftClock {
    fn kind(&self) -> BlockKind {
        BlockKind::Clock
    }

    fn push(&mut self, input: Stream) -> Result<Stream, BlockError> {
        let bits = symbols_in(input, 1)?;
        let out = bits
            .into_iter()
            .map(|b| {
                self.state = if b == 1 { (self.state + 1) & 3 } else { (self.state + 3) & 3 };
                self.state
            })
            .collect();
        Ok(sym(out, 2))
    }

    fn finish(&mut self) -> Result<Stream, BlockError> {
        Ok(sym(Vec::new(), 2))
    }
}

struct SoftDiffenc {
    prev: u8,
}

impl SoftBlock for SoftDiffenc {
    fn kind(&self) -> BlockKind {
        BlockKind::Diffenc
    }

    fn push(&mut self, input: Stream) -> Result<Stream, BlockError> {
        let bits = symbols_in(input, 1)?;
        let out = bits
            .into_iter()
            .map(|r| {
                self.prev ^= r;
                self.prev
            })
            .collect();
        Ok(sym(out, 1))
    }

    fn finish(&mut self) -> Result<Stream, BlockError> {
        Ok(sym(Vec::new(), 1))
    }
}

struct SoftChip {
    table: ChipTable,
}

impl SoftBlock for SoftChip {
    fn kind(&self) -> BlockKind {
        BlockKind::Chip
    }

    fn push(&mut self, input: Stream) -> Result<Stream, BlockError> {
        let symbols = match input {
            Stream::Symbols(s) => s.into_items(),
            Stream::Iq(_) => return Err(BlockError::ExpectedSymbols),
        };
        let mut out = Vec::with_capacity(symbols.len() * self.table.chips_per_symbol());
        for s in symbols {
            out.extend_from_slice(self.table.row(s)?);
        }
        Ok(sym(out, 1))
    }

    fn finish(&mut self) -> Result<Stream, BlockError> {
        Ok(sym(Vec::new(), 1))
    }
}

struct SoftMapper {
    constellation: Constellation,
    hold: usize,
    /// Even chip waiting for its odd partner.
    carry: Option<u8>,
}

impl SoftMapper {
    fn level(bit: u8) -> f64 {
        [-1.0, 1.0][usize::from(bit & 1)]
    }
}

impl SoftBlock for SoftMapper {
    fn kind(&self) -> BlockKind {
        BlockKind::Mapper
    }

    fn push(&mut self, input: Stream) -> Result<Stream, BlockError> {
        let symbols = symbols_in(input, self.constellation.input_width())?;
        let mut out = Vec::new();
        let mut emit = |p: Sample| out.extend(std::iter::repeat(p).take(self.hold));
        for s in symbols {
            match self.constellation {
                Constellation::Bipolar => emit(Sample::new(Self::level(s), 0.0)),
                Constellation::Quadrant => {
                    let p = match s {
                        0 => Sample::new(1.0, 0.0),
                        1 => Sample::new(0.0, 1.0),
                        2 => Sample::new(-1.0, 0.0),
                        _ => Sample::new(0.0, -1.0),
                    };
                    emit(p)
                }
                Constellation::OqpskInterleave => match self.carry.take() {
                    None => self.carry = Some(s),
                    Some(even) => emit(Sample::new(Self::level(even), Self::level(s))),
                },
            }
        }
        Ok(Stream::Iq(out))
    }

    fn finish(&mut self) -> Result<Stream, BlockError> {
        match self.carry {
            Some(_) => Err(BlockError::OddChipCount(1)),
            None => Ok(Stream::Iq(Vec::new())),
        }
    }
}

/// Circular-history FIR. Taps are applied newest sample first, matching the
/// hardware accumulation order so results agree to the bit.
struct SoftFir {
    taps: Vec<f64>,
    history: Vec<Sample>,
    head: usize,
    flush_tail: bool,
}

impl SoftFir {
    fn new(taps: &Taps, flush_tail: bool) -> Self {
        let taps = taps.coeffs().to_vec();
        Self {
            history: vec![Sample::new(0.0, 0.0); taps.len()],
            taps,
            head: 0,
            flush_tail,
        }
    }

    fn step(&mut self, x: Sample) -> Sample {
        let len = self.history.len();
        self.head = (self.head + 1) % len;
        self.history[self.head] = x;
        let (mut i, mut q) = (0.0f64, 0.0f64);
        for (k, c) in self.taps.iter().enumerate() {
            let h = self.history[(self.head + len - k) % len];
            i += c * h.re;
            q += c * h.im;
        }
        Sample::new(i, q)
    }
}

impl SoftBlock for SoftFir {
    fn kind(&self) -> BlockKind {
        BlockKind::Fir
    }

    fn push(&mut self, input: Stream) -> Result<Stream, BlockError> {
        let xs = iq_in(input)?;
        Ok(Stream::Iq(xs.into_iter().map(|x| self.step(x)).collect()))
    }

    fn finish(&mut self) -> Result<Stream, BlockError> {
        let tail = if self.flush_tail { self.taps.len() - 1 } else { 0 };
        Ok(Stream::Iq((0..tail).map(|_| self.step(Sample::new(0.0, 0.0))).collect()))
    }
}

struct SoftZpad {
    zeros: usize,
    every: usize,
    count: usize,
}

impl SoftBlock for SoftZpad {
    fn kind(&self) -> BlockKind {
        BlockKind::Zpad
    }

    fn push(&mut self, input: Stream) -> Result<Stream, BlockError> {
        let xs = iq_in(input)?;
        let mut out = Vec::with_capacity(xs.len() * (self.every + self.zeros) / self.every + 1);
        for x in xs {
            out.push(x);
            self.count += 1;
            if self.count == self.every {
                self.count = 0;
                out.resize(out.len() + self.zeros, Sample::new(0.0, 0.0));
            }
        }
        Ok(Stream::Iq(out))
    }

    fn finish(&mut self) -> Result<Stream, BlockError> {
        Ok(Stream::Iq(Vec::new()))
    }
}

struct SoftOffset {
    line: VecDeque<f64>,
}

impl SoftBlock for SoftOffset {
    fn kind(&self) -> BlockKind {
        BlockKind::Offset
    }

    fn push(&mut self, input: Stream) -> Result<Stream, BlockError> {
        let xs = iq_in(input)?;
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            self.line.push_back(x.im);
            let q = self.line.pop_front().unwrap_or(0.0);
            out.push(Sample::new(x.re, q));
        }
        Ok(Stream::Iq(out))
    }

    fn finish(&mut self) -> Result<Stream, BlockError> {
        Ok(Stream::Iq(self.line.drain(..).map(|q| Sample::new(0.0, q)).collect()))
    }
}

/// Instantiates the software twin of a configured block.
pub fn soft_block(cfg: &BlockConfig) -> Result<Box<dyn SoftBlock>, BlockError> {
    Ok(match cfg.params() {
        BlockParams::Splitter { mode } => Box::new(SoftSplitter { mode: *mode }),
        BlockParams::Pn9 { seed } => Box::new(SoftPn9::new(*seed)?),
        BlockParams::Clock { start } => {
            if *start > 3 {
                return Err(BlockError::BadClockStart(*start));
            }
            Box::new(SoftClock { state: *start })
        }
        BlockParams::Diffenc => Box::new(SoftDiffenc { prev: 0 }),
        BlockParams::Chip { table } => Box::new(SoftChip { table: table.clone() }),
        BlockParams::Mapper { constellation, hold } => {
            if *hold == 0 {
                return Err(BlockError::ZeroHold);
            }
            Box::new(SoftMapper {
                constellation: *constellation,
                hold: *hold,
                carry: None,
            })
        }
        BlockParams::Fir { taps, flush_tail } => Box::new(SoftFir::new(taps, *flush_tail)),
        BlockParams::Zpad { zeros, every } => {
            if *every == 0 {
                return Err(BlockError::ZeroPadPeriod);
            }
            Box::new(SoftZpad {
                zeros: *zeros,
                every: *every,
                count: 0,
            })
        }
        BlockParams::Offset { delay } => Box::new(SoftOffset {
            line: std::iter::repeat(0.0).take(*delay).collect(),
        }),
    })
}

/// Items consumed by one software block during one push or finish.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockWork {
    pub kind: BlockKind,
    pub items: usize,
}

/// A chain of enabled software blocks run as one segment.
pub struct SoftSegment {
    blocks: Vec<Box<dyn SoftBlock>>,
}

impl SoftSegment {
    /// Builds the chain from the enabled blocks among `stages`.
    pub fn new<'a>(stages: impl IntoIterator<Item = &'a BlockConfig>) -> Result<Self, BlockError> {
        let blocks = stages
            .into_iter()
            .filter(|b| b.is_enabled())
            .map(soft_block)
            .collect::<Result<_, _>>()?;
        Ok(Self { blocks })
    }

    pub fn kinds(&self) -> Vec<BlockKind> {
        self.blocks.iter().map(|b| b.kind()).collect()
    }

    /// Feeds one chunk through the chain, recording per-block input counts.
    pub fn push(&mut self, chunk: Stream) -> Result<(Stream, Vec<BlockWork>), BlockError> {
        let mut work = Vec::with_capacity(self.blocks.len());
        let mut s = chunk;
        for b in &mut self.blocks {
            work.push(BlockWork {
                kind: b.kind(),
                items: s.len(),
            });
            s = b.push(s)?;
        }
        Ok((s, work))
    }

    /// Drains every block in order, pushing each tail through the rest.
    /// Returns `None` for an empty chain.
    pub fn finish(&mut self) -> Result<Option<(Stream, Vec<BlockWork>)>, BlockError> {
        let mut work: Vec<BlockWork> = Vec::new();
        let mut out: Option<Stream> = None;
        for i in 0..self.blocks.len() {
            let mut s = self.blocks[i].finish()?;
            for b in &mut self.blocks[i + 1..] {
                match work.iter_mut().find(|w| w.kind == b.kind()) {
                    Some(w) => w.items += s.len(),
                    None => work.push(BlockWork {
                        kind: b.kind(),
                        items: s.len(),
                    }),
                }
                s = b.push(s)?;
            }
            match &mut out {
                Some(o) => o.extend(s),
                None => out = Some(s),
            }
        }
        Ok(out.map(|o| (o, work)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy;
    use crate::stream::SymbolStream;

    fn cfg(p: BlockParams) -> BlockConfig {
        BlockConfig::enabled(p).unwrap()
    }

    fn chunked(block: &BlockConfig, input: &Stream, sizes: &[usize]) -> Stream {
        let mut sw = soft_block(block).unwrap();
        let mut out: Option<Stream> = None;
        let mut at = 0;
        let mut i = 0;
        while at < input.len() {
            let n = sizes[i % sizes.len()].min(input.len() - at);
            let piece = sw.push(input.slice(at, at + n)).unwrap();
            match &mut out {
                Some(o) => o.extend(piece),
                None => out = Some(piece),
            }
            at += n;
            i += 1;
        }
        let tail = sw.finish().unwrap();
        match &mut out {
            Some(o) => {
                o.extend(tail);
                out.unwrap()
            }
            None => tail,
        }
    }

    #[test]
    fn pn9_recurrence_matches_register() {
        let mut reg = phy::Pn9::new(0x1ff).unwrap();
        let mut seq = SoftPn9::new(0x1ff).unwrap();
        for _ in 0..2000 {
            assert_eq!(reg.next_bit(), seq.next());
        }
    }

    #[test]
    fn odd_chunks_match_hardware() {
        let bits = Stream::Symbols(SymbolStream::bits((0..97).map(|i| ((i * 7) % 3 == 0) as u8).collect()).unwrap());
        for p in [BlockParams::Pn9 { seed: 0x1ff }, BlockParams::Clock { start: 2 }, BlockParams::Diffenc] {
            let b = cfg(p);
            let hw = b.apply(bits.clone()).unwrap();
            assert!(chunked(&b, &bits, &[1, 5, 13]).bit_identical(&hw), "{}", b.kind());
        }
        let iq = Stream::Iq((0..77).map(|i| Sample::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect());
        for p in [
            BlockParams::Fir {
                taps: Taps::half_sine(),
                flush_tail: true,
            },
            BlockParams::Fir {
                taps: Taps::raised_cosine(),
                flush_tail: false,
            },
            BlockParams::Zpad { zeros: 3, every: 2 },
            BlockParams::Offset { delay: 3 },
        ] {
            let b = cfg(p);
            let hw = b.apply(iq.clone()).unwrap();
            assert!(chunked(&b, &iq, &[4, 1, 9]).bit_identical(&hw), "{}", b.kind());
        }
    }

    #[test]
    fn interleave_carries_across_chunks() {
        let chips = Stream::Symbols(SymbolStream::bits(vec![1, 0, 0, 1, 1, 1]).unwrap());
        let b = cfg(BlockParams::Mapper {
            constellation: Constellation::OqpskInterleave,
            hold: 2,
        });
        assert!(chunked(&b, &chips, &[1]).bit_identical(&b.apply(chips.clone()).unwrap()));
        let mut sw = soft_block(&b).unwrap();
        sw.push(Stream::Symbols(SymbolStream::bits(vec![1]).unwrap())).unwrap();
        assert!(matches!(sw.finish(), Err(BlockError::OddChipCount(_))));
    }
}
