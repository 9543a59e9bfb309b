//! Symbol-to-chip spreading tables.

use std::path::Path;

use super::BlockError;
use crate::stream::SymbolStream;

const OQPSK_TABLE: &str = include_str!("../../data/chips/oqpsk.txt");
const BPSK_TABLE: &str = include_str!("../../data/chips/bpsk.txt");

/// One row of chips per symbol value; chip `c0` is the first element of each row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChipTable {
    name: String,
    rows: Vec<Vec<u8>>,
}

impl ChipTable {
    pub fn new(name: impl Into<String>, rows: Vec<Vec<u8>>) -> Result<Self, BlockError> {
        let name = name.into();
        let bad = |reason: &str| BlockError::BadChipTable {
            name: name.clone(),
            reason: reason.to_string(),
        };
        let first = rows.first().ok_or_else(|| bad("no rows"))?;
        if first.is_empty() {
            return Err(bad("empty row"));
        }
        if rows.iter().any(|r| r.len() != first.len()) {
            return Err(bad("rows differ in length"));
        }
        if rows.iter().flatten().any(|&c| c > 1) {
            return Err(bad("chip value other than 0/1"));
        }
        Ok(Self { name, rows })
    }

    /// Parses the text format: one row per symbol, chips as `0`/`1` characters.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self, BlockError> {
        let name = name.into();
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .chars()
                .map(|c| match c {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    other => Err(BlockError::BadChipTable {
                        name: name.clone(),
                        reason: format!("line {}: unexpected character {other:?}", lineno + 1),
                    }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::new(name, rows)
    }

    pub fn load(path: &Path) -> Result<Self, BlockError> {
        let text = std::fs::read_to_string(path).map_err(|e| BlockError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(path.display().to_string(), &text)
    }

    /// The 2450 MHz O-QPSK table: 16 symbols x 32 chips.
    pub fn oqpsk() -> Self {
        Self::parse("oqpsk", OQPSK_TABLE).expect("bundled O-QPSK chip table")
    }

    /// The 868/915 MHz BPSK table: 2 symbols x 15 chips.
    pub fn bpsk() -> Self {
        Self::parse("bpsk", BPSK_TABLE).expect("bundled BPSK chip table")
    }

    /// Looks up a bundled table by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "oqpsk" => Some(Self::oqpsk()),
            "bpsk" => Some(Self::bpsk()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn symbols(&self) -> usize {
        self.rows.len()
    }

    pub fn chips_per_symbol(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, symbol: u8) -> Result<&[u8], BlockError> {
        self.rows
            .get(usize::from(symbol))
            .map(Vec::as_slice)
            .ok_or(BlockError::SymbolOutsideTable {
                symbol,
                symbols: self.rows.len(),
            })
    }

    /// Renders the table back to its text form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s.extend(r.iter().map(|&c| if c == 1 { '1' } else { '0' }));
            s.push('\n');
        }
        s
    }
}

/// Concatenates the chip rows of each symbol in order.
pub fn chip_map(symbols: &SymbolStream, table: &ChipTable) -> Result<SymbolStream, BlockError> {
    let mut out = Vec::with_capacity(symbols.len() * table.chips_per_symbol());
    for &s in symbols.items() {
        out.extend_from_slice(table.row(s)?);
    }
    Ok(SymbolStream::from_parts_unchecked(out, 1))
}
