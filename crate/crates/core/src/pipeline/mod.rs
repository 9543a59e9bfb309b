//! The unified nine-stage transmit pipeline, its standard presets, and
//! per-boundary data rates.

mod file;

use std::fmt;
use std::ops::RangeInclusive;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use file::{load_presets, parse_presets, presets_to_toml, PresetEntry, PresetFile, StagesSpec};

use crate::phy::{byte_stream, BlockConfig, BlockError, BlockKind};
use crate::stream::{words_for, Stream, BUS_WORD_BITS};

/// Number of stages in the unified pipeline.
pub const STAGE_COUNT: usize = 9;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unknown preset id {0} (expected 1..=6)")]
    UnknownPreset(u8),
    #[error("stage {0} listed more than once")]
    DuplicateStage(BlockKind),
    #[error("stage {later} listed after {earlier}; stages must follow the unified order")]
    StageOrder { earlier: BlockKind, later: BlockKind },
    #[error("packet is empty")]
    EmptyPacket,
    #[error("{}{source}", stage.map(|s| format!("stage {s}: ")).unwrap_or_default())]
    Block {
        stage: Option<BlockKind>,
        #[source]
        source: BlockError,
    },
    #[error("pipeline configured for preset {config} cannot be profiled against preset {preset}")]
    PresetMismatch { config: u8, preset: u8 },
    #[error("pipeline output is not an IQ stream")]
    NotIq,
    #[error("preset file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<BlockError> for PipelineError {
    fn from(e: BlockError) -> Self {
        PipelineError::Block { stage: None, source: e }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Modulation {
    Oqpsk,
    Bpsk,
    Gfsk,
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Oqpsk => "OQPSK",
            Modulation::Bpsk => "BPSK",
            Modulation::Gfsk => "GFSK",
        })
    }
}

/// Stages in fixed unified order; kinds not listed are absent (identity).
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    stages: Vec<BlockConfig>,
    pub label: Option<String>,
    pub preset_id: Option<u8>,
}

impl PipelineConfig {
    pub fn new(stages: Vec<BlockConfig>, label: Option<String>) -> Result<Self, PipelineError> {
        for pair in stages.windows(2) {
            let (a, b) = (pair[0].kind(), pair[1].kind());
            if a == b {
                return Err(PipelineError::DuplicateStage(a));
            }
            if a > b {
                return Err(PipelineError::StageOrder { earlier: a, later: b });
            }
        }
        Ok(Self {
            stages,
            label,
            preset_id: None,
        })
    }

    pub fn stages(&self) -> &[BlockConfig] {
        &self.stages
    }

    pub fn stage(&self, kind: BlockKind) -> Option<&BlockConfig> {
        self.stages.iter().find(|b| b.kind() == kind)
    }

    pub fn stage_mut(&mut self, kind: BlockKind) -> Option<&mut BlockConfig> {
        self.stages.iter_mut().find(|b| b.kind() == kind)
    }

    pub fn is_enabled(&self, kind: BlockKind) -> bool {
        self.stage(kind).is_some_and(BlockConfig::is_enabled)
    }

    /// Enabled kinds in pipeline order.
    pub fn enabled_kinds(&self) -> Vec<BlockKind> {
        self.stages
            .iter()
            .filter(|b| b.is_enabled())
            .map(BlockConfig::kind)
            .collect()
    }

    /// Runs the stages whose unified index lies in `range` over `input`.
    pub fn run_range(&self, range: RangeInclusive<usize>, input: Stream) -> Result<Stream, PipelineError> {
        self.stages
            .iter()
            .filter(|b| range.contains(&b.kind().index()))
            .try_fold(input, |s, b| {
                b.apply(s).map_err(|e| PipelineError::Block {
                    stage: Some(b.kind()),
                    source: e,
                })
            })
    }

    /// Product of rate multipliers over a unified index range.
    pub fn rate_over(&self, range: RangeInclusive<usize>) -> Ratio<u64> {
        self.stages
            .iter()
            .filter(|b| range.contains(&b.kind().index()))
            .fold(Ratio::from_integer(1), |acc, b| acc * b.rate())
    }

    /// Bits per item at each of the ten boundaries; boundary `k` feeds stage `k`.
    pub fn boundary_bits(&self) -> [u32; STAGE_COUNT + 1] {
        let mut bits = [8u32; STAGE_COUNT + 1];
        for k in 0..STAGE_COUNT {
            let kind = BlockKind::ALL[k];
            bits[k + 1] = match self.stage(kind) {
                Some(b) => b.output_bits(bits[k]),
                None => bits[k],
            };
        }
        bits
    }
}

/// One row of the standard rate table together with its pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardPreset {
    pub id: u8,
    pub band: String,
    pub modulation: Modulation,
    /// Bytes per second.
    pub data_rate: u64,
    /// Symbols per second after the splitter.
    pub symbol_rate: u64,
    /// Complex samples per second at the DAC.
    pub sample_rate: u64,
    pub pipeline: PipelineConfig,
}

impl StandardPreset {
    pub fn name(&self) -> String {
        format!("{}-{}", self.modulation, self.band.split_whitespace().next().unwrap_or(""))
    }
}

/// The six bundled presets, in id order.
pub fn standard_presets() -> Vec<StandardPreset> {
    parse_presets(file::BUNDLED_PRESETS, None).expect("bundled presets parse")
}

/// Looks up a bundled preset by id.
pub fn preset(id: u8) -> Result<StandardPreset, PipelineError> {
    standard_presets()
        .into_iter()
        .find(|p| p.id == id)
        .ok_or(PipelineError::UnknownPreset(id))
}

/// The pipeline configuration of a bundled preset.
pub fn build_preset(id: u8) -> Result<PipelineConfig, PipelineError> {
    preset(id).map(|p| p.pipeline)
}

/// Feeds a packet through every enabled stage in order.
pub fn run_pipeline(cfg: &PipelineConfig, packet: &[u8]) -> Result<Stream, PipelineError> {
    if packet.is_empty() {
        return Err(PipelineError::EmptyPacket);
    }
    cfg.run_range(0..=STAGE_COUNT - 1, byte_stream(packet))
}

/// Like [`run_pipeline`], but requires an IQ result.
pub fn modulate(cfg: &PipelineConfig, packet: &[u8]) -> Result<crate::stream::IqStream, PipelineError> {
    run_pipeline(cfg, packet)?.into_iq().ok_or(PipelineError::NotIq)
}

/// Rate at one inter-stage boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryRate {
    /// Items per second.
    pub items_per_sec: Ratio<u64>,
    pub item_bits: u32,
}

impl BoundaryRate {
    pub fn bits_per_sec(&self) -> Ratio<u64> {
        self.items_per_sec * u64::from(self.item_bits)
    }

    /// Interposer bus words per second (narrow items packed into 32-bit words).
    pub fn words_per_sec(&self) -> Ratio<u64> {
        self.bits_per_sec() / u64::from(BUS_WORD_BITS)
    }
}

/// Rates at the ten boundaries of the unified pipeline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateProfile {
    pub boundaries: [BoundaryRate; STAGE_COUNT + 1],
}

impl RateProfile {
    pub fn first(&self) -> &BoundaryRate {
        &self.boundaries[0]
    }

    pub fn last(&self) -> &BoundaryRate {
        &self.boundaries[STAGE_COUNT]
    }

    /// Bus words per second crossing the interposers around a software
    /// segment: into the CPU before `first`, and back out after `last`.
    pub fn segment_traffic(&self, first: usize, last: usize) -> Ratio<u64> {
        self.boundaries[first].words_per_sec() + self.boundaries[last + 1].words_per_sec()
    }
}

/// Rates at every boundary given an input data rate in bytes/s.
pub fn profile_for_rate(cfg: &PipelineConfig, data_rate: u64) -> RateProfile {
    let bits = cfg.boundary_bits();
    let mut rate = Ratio::from_integer(data_rate);
    let mut boundaries = [BoundaryRate {
        items_per_sec: rate,
        item_bits: 8,
    }; STAGE_COUNT + 1];
    for k in 0..STAGE_COUNT {
        rate *= cfg.rate_over(k..=k);
        boundaries[k + 1] = BoundaryRate {
            items_per_sec: rate,
            item_bits: bits[k + 1],
        };
    }
    RateProfile { boundaries }
}

/// Cumulative rate profile of `cfg` driven at `preset`'s data rate.
pub fn rate_profile(cfg: &PipelineConfig, preset: &StandardPreset) -> Result<RateProfile, PipelineError> {
    if let Some(id) = cfg.preset_id {
        if id != preset.id {
            return Err(PipelineError::PresetMismatch {
                config: id,
                preset: preset.id,
            });
        }
    }
    Ok(profile_for_rate(cfg, preset.data_rate))
}

/// Items at every boundary for a packet of `packet_len` bytes, exact.
pub fn boundary_lengths(cfg: &PipelineConfig, packet_len: usize) -> Result<[usize; STAGE_COUNT + 1], PipelineError> {
    let mut lens = [0usize; STAGE_COUNT + 1];
    lens[0] = packet_len;
    let mut s = byte_stream(&vec![0u8; packet_len]);
    for k in 0..STAGE_COUNT {
        s = cfg.run_range(k..=k, s)?;
        lens[k + 1] = s.len();
    }
    Ok(lens)
}

/// Bus words at a boundary for `items` items.
pub fn boundary_words(cfg: &PipelineConfig, boundary: usize, items: usize) -> usize {
    words_for(items, cfg.boundary_bits()[boundary])
}
