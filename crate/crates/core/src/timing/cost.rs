use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::phy::BlockKind;
use crate::stream::BUS_WORD_BITS;

pub(crate) const BUNDLED_COST_MODEL: &str = include_str!("../../data/cost_model.toml");

/// Highest sample rate among the standard presets.
const MAX_PRESET_SAMPLE_RATE: u64 = 4_000_000;

/// Parametric CPU and DMA costs, all in CPU cycles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub cpu_hz: u64,
    pub irq_latency_cycles: u64,
    /// Fixed cost of one cache flush or invalidate system call.
    pub cache_op_cycles: u64,
    /// Additional cost per cache line touched by a flush or invalidate.
    pub cache_line_cycles: u64,
    pub cache_line_bytes: u64,
    /// CPU copy cost per bus word between DMA memory and working buffers.
    pub copy_cycles_per_word: u64,
    pub dma_setup_cycles: u64,
    /// Time the DMA engine needs per word; not charged to the CPU.
    pub dma_cycles_per_word: u64,
    pub loop_cycles: u64,
    pub init_cycles: u64,
    pub end_cycles: u64,
    #[serde(default)]
    pub dsp_cycles_per_item: BTreeMap<BlockKind, u64>,
}

impl Default for CostModel {
    fn default() -> Self {
        Self::parse(BUNDLED_COST_MODEL).expect("bundled cost model parses")
    }
}

impl CostModel {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let m: CostModel = toml::from_str(text).map_err(|e| SimError::Cost(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("cost model serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.cpu_hz <= MAX_PRESET_SAMPLE_RATE {
            return Err(SimError::Cost(format!(
                "cpu_hz {} must exceed every preset sample rate ({MAX_PRESET_SAMPLE_RATE})",
                self.cpu_hz
            )));
        }
        if self.cache_line_bytes == 0 {
            return Err(SimError::Cost("cache_line_bytes must be positive".into()));
        }
        Ok(())
    }

    pub fn dsp(&self, kind: BlockKind) -> u64 {
        self.dsp_cycles_per_item.get(&kind).copied().unwrap_or(0)
    }

    /// The same model with every DSP cost set to zero.
    pub fn without_dsp(&self) -> Self {
        let mut m = self.clone();
        for v in m.dsp_cycles_per_item.values_mut() {
            *v = 0;
        }
        m
    }

    pub fn cache_lines(&self, words: usize) -> u64 {
        (words as u64 * u64::from(BUS_WORD_BITS / 8)).div_ceil(self.cache_line_bytes)
    }

    /// Invalidate plus copy-out of one outbound buffer.
    pub fn read_cycles(&self, words: usize) -> u64 {
        self.cache_op_cycles + self.cache_lines(words) * self.cache_line_cycles + words as u64 * self.copy_cycles_per_word
    }

    /// Copy-in, flush and DMA kick-off of one inbound chunk.
    pub fn write_cycles(&self, words: usize) -> u64 {
        self.cache_op_cycles
            + self.cache_lines(words) * self.cache_line_cycles
            + words as u64 * self.copy_cycles_per_word
            + self.dma_setup_cycles
    }

    pub fn dma_time(&self, words: usize) -> u64 {
        words as u64 * self.dma_cycles_per_word
    }
}
