//! Symbol to IQ constellation mapping.

use serde::{Deserialize, Serialize};

use super::BlockError;
use crate::stream::{IqStream, Sample, SymbolStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constellation {
    /// Width-1 symbols; 0 maps to -1, 1 to +1 on the I rail.
    Bipolar,
    /// Width-1 chips taken in pairs: even chip drives I, odd chip drives Q.
    OqpskInterleave,
    /// Width-2 symbols; unit points counterclockwise from (1, 0).
    Quadrant,
}

impl Constellation {
    pub fn input_width(self) -> u8 {
        match self {
            Constellation::Bipolar | Constellation::OqpskInterleave => 1,
            Constellation::Quadrant => 2,
        }
    }

    /// Input symbols consumed per emitted point (before hold).
    pub fn symbols_per_point(self) -> usize {
        match self {
            Constellation::OqpskInterleave => 2,
            Constellation::Bipolar | Constellation::Quadrant => 1,
        }
    }
}

#[inline]
fn bipolar(bit: u8) -> f64 {
    if bit == 0 {
        -1.0
    } else {
        1.0
    }
}

/// The four quadrant points, indexed counterclockwise from (1, 0).
pub const QUADRANT_POINTS: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];

/// Maps symbols to IQ points, repeating each point `hold` times.
pub fn mapper(symbols: &SymbolStream, constellation: Constellation, hold: usize) -> Result<IqStream, BlockError> {
    if symbols.width() != constellation.input_width() {
        return Err(BlockError::WidthMismatch {
            expected: constellation.input_width(),
            found: symbols.width(),
        });
    }
    if hold == 0 {
        return Err(BlockError::ZeroHold);
    }
    let items = symbols.items();
    let points: Vec<Sample> = match constellation {
        Constellation::Bipolar => items.iter().map(|&b| Sample::new(bipolar(b), 0.0)).collect(),
        Constellation::Quadrant => items
            .iter()
            .map(|&s| {
                let (i, q) = QUADRANT_POINTS[usize::from(s)];
                Sample::new(i, q)
            })
            .collect(),
        Constellation::OqpskInterleave => {
            if items.len() % 2 != 0 {
                return Err(BlockError::OddChipCount(items.len()));
            }
            items
                .chunks_exact(2)
                .map(|p| Sample::new(bipolar(p[0]), bipolar(p[1])))
                .collect()
        }
    };
    Ok(points
        .into_iter()
        .flat_map(|p| std::iter::repeat(p).take(hold))
        .collect())
}
