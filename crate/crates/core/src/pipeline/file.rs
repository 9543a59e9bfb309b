//! TOML preset / pipeline file format.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Modulation, PipelineConfig, PipelineError, StandardPreset};
use crate::phy::{BlockConfig, BlockParams, ChipTable, Constellation, SplitMode, Taps, PN9_DEFAULT_SEED};

pub(crate) const BUNDLED_PRESETS: &str = include_str!("../../data/presets.toml");

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetFile {
    pub preset: Vec<PresetEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetEntry {
    pub id: u8,
    pub band: String,
    pub modulation: Modulation,
    pub data_rate: u64,
    pub symbol_rate: u64,
    pub sample_rate: u64,
    pub stages: StagesSpec,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagesSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitter: Option<SplitterSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pn9: Option<Pn9Spec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clock: Option<ClockSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diffenc: Option<DiffencSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chip: Option<ChipSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mapper: Option<MapperSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fir: Option<FirSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zpad: Option<ZpadSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<OffsetSpec>,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

fn default_seed() -> u16 {
    PN9_DEFAULT_SEED
}

fn default_hold() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitterSpec {
    pub mode: SplitMode,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pn9Spec {
    #[serde(default = "default_seed")]
    pub seed: u16,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockSpec {
    #[serde(default)]
    pub start: u8,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffencSpec {
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChipSpec {
    pub table: String,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapperSpec {
    pub constellation: Constellation,
    #[serde(default = "default_hold")]
    pub hold: usize,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirSpec {
    pub taps: String,
    #[serde(default)]
    pub flush_tail: bool,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZpadSpec {
    pub zeros: usize,
    pub every: usize,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffsetSpec {
    pub delay: usize,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub enabled: bool,
}

fn resolve_table(name: &str, base: Option<&Path>) -> Result<ChipTable, PipelineError> {
    if let Some(t) = ChipTable::builtin(name) {
        return Ok(t);
    }
    Ok(ChipTable::load(&relative(name, base))?)
}

fn resolve_taps(name: &str, base: Option<&Path>) -> Result<Taps, PipelineError> {
    if let Some(t) = Taps::builtin(name) {
        return Ok(t);
    }
    Ok(Taps::load(&relative(name, base))?)
}

fn relative(name: &str, base: Option<&Path>) -> PathBuf {
    match base {
        Some(dir) => dir.join(name),
        None => PathBuf::from(name),
    }
}

impl StagesSpec {
    pub fn to_config(&self, label: Option<String>, base: Option<&Path>) -> Result<PipelineConfig, PipelineError> {
        let mut stages = Vec::new();
        let mut push = |params: BlockParams, enabled: bool| -> Result<(), PipelineError> {
            stages.push(BlockConfig::new(params, enabled).map_err(|e| PipelineError::Block {
                stage: None,
                source: e,
            })?);
            Ok(())
        };
        if let Some(s) = &self.splitter {
            push(BlockParams::Splitter { mode: s.mode }, s.enabled)?;
        }
        if let Some(s) = &self.pn9 {
            push(BlockParams::Pn9 { seed: s.seed }, s.enabled)?;
        }
        if let Some(s) = &self.clock {
            push(BlockParams::Clock { start: s.start }, s.enabled)?;
        }
        if let Some(s) = &self.diffenc {
            push(BlockParams::Diffenc, s.enabled)?;
        }
        if let Some(s) = &self.chip {
            push(
                BlockParams::Chip {
                    table: resolve_table(&s.table, base)?,
                },
                s.enabled,
            )?;
        }
        if let Some(s) = &self.mapper {
            push(
                BlockParams::Mapper {
                    constellation: s.constellation,
                    hold: s.hold,
                },
                s.enabled,
            )?;
        }
        if let Some(s) = &self.fir {
            push(
                BlockParams::Fir {
                    taps: resolve_taps(&s.taps, base)?,
                    flush_tail: s.flush_tail,
                },
                s.enabled,
            )?;
        }
        if let Some(s) = &self.zpad {
            push(
                BlockParams::Zpad {
                    zeros: s.zeros,
                    every: s.every,
                },
                s.enabled,
            )?;
        }
        if let Some(s) = &self.offset {
            push(BlockParams::Offset { delay: s.delay }, s.enabled)?;
        }
        PipelineConfig::new(stages, label)
    }

    pub fn from_config(cfg: &PipelineConfig) -> Self {
        let mut spec = StagesSpec::default();
        for b in cfg.stages() {
            let enabled = b.is_enabled();
            match b.params() {
                BlockParams::Splitter { mode } => spec.splitter = Some(SplitterSpec { mode: *mode, enabled }),
                BlockParams::Pn9 { seed } => spec.pn9 = Some(Pn9Spec { seed: *seed, enabled }),
                BlockParams::Clock { start } => spec.clock = Some(ClockSpec { start: *start, enabled }),
                BlockParams::Diffenc => spec.diffenc = Some(DiffencSpec { enabled }),
                BlockParams::Chip { table } => {
                    spec.chip = Some(ChipSpec {
                        table: table.name().to_string(),
                        enabled,
                    })
                }
                BlockParams::Mapper { constellation, hold } => {
                    spec.mapper = Some(MapperSpec {
                        constellation: *constellation,
                        hold: *hold,
                        enabled,
                    })
                }
                BlockParams::Fir { taps, flush_tail } => {
                    spec.fir = Some(FirSpec {
                        taps: taps.name().to_string(),
                        flush_tail: *flush_tail,
                        enabled,
                    })
                }
                BlockParams::Zpad { zeros, every } => {
                    spec.zpad = Some(ZpadSpec {
                        zeros: *zeros,
                        every: *every,
                        enabled,
                    })
                }
                BlockParams::Offset { delay } => spec.offset = Some(OffsetSpec { delay: *delay, enabled }),
            }
        }
        spec
    }
}

impl PresetEntry {
    pub fn resolve(&self, base: Option<&Path>) -> Result<StandardPreset, PipelineError> {
        let label = format!("{}-{}", self.modulation, self.band);
        let mut pipeline = self.stages.to_config(Some(label), base)?;
        pipeline.preset_id = Some(self.id);
        Ok(StandardPreset {
            id: self.id,
            band: self.band.clone(),
            modulation: self.modulation,
            data_rate: self.data_rate,
            symbol_rate: self.symbol_rate,
            sample_rate: self.sample_rate,
            pipeline,
        })
    }

    pub fn from_preset(p: &StandardPreset) -> Self {
        Self {
            id: p.id,
            band: p.band.clone(),
            modulation: p.modulation,
            data_rate: p.data_rate,
            symbol_rate: p.symbol_rate,
            sample_rate: p.sample_rate,
            stages: StagesSpec::from_config(&p.pipeline),
        }
    }
}

/// Parses a preset file. Relative tap/table paths resolve against `base`.
pub fn parse_presets(text: &str, base: Option<&Path>) -> Result<Vec<StandardPreset>, PipelineError> {
    let file: PresetFile = toml::from_str(text).map_err(|e| PipelineError::Format(e.to_string()))?;
    let mut out = Vec::with_capacity(file.preset.len());
    for entry in &file.preset {
        if out.iter().any(|p: &StandardPreset| p.id == entry.id) {
            return Err(PipelineError::Format(format!("duplicate preset id {}", entry.id)));
        }
        out.push(entry.resolve(base)?);
    }
    Ok(out)
}

pub fn load_presets(path: &Path) -> Result<Vec<StandardPreset>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_presets(&text, path.parent())
}

/// Renders presets back into the file format.
pub fn presets_to_toml(presets: &[StandardPreset]) -> String {
    let file = PresetFile {
        preset: presets.iter().map(PresetEntry::from_preset).collect(),
    };
    toml::to_string(&file).expect("preset serialization")
}
