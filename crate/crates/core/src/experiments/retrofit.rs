use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::hybrid::{split_execute, SplitPlan};
use crate::phy::BlockKind;
use crate::pipeline::{run_pipeline, Modulation, StandardPreset};
use crate::timing::{simulate, CostModel};

/// A modulation added "after the fact": the blocks only it uses run in
/// software on an accelerator that lacks them.
#[derive(Clone, Debug, PartialEq)]
pub struct RetrofitScenario {
    pub preset: StandardPreset,
    pub missing_blocks: Vec<BlockKind>,
}

/// Blocks used by exactly one modulation family.
pub fn unique_blocks(modulation: Modulation) -> Vec<BlockKind> {
    match modulation {
        Modulation::Oqpsk => vec![BlockKind::Zpad, BlockKind::Offset],
        Modulation::Bpsk => vec![BlockKind::Diffenc],
        Modulation::Gfsk => vec![BlockKind::Pn9, BlockKind::Clock],
    }
}

impl RetrofitScenario {
    /// The standard scenario for a preset: its modulation's unique blocks.
    pub fn standard(preset: StandardPreset) -> Self {
        let missing_blocks = unique_blocks(preset.modulation);
        Self { preset, missing_blocks }
    }

    pub fn new(preset: StandardPreset, mut missing_blocks: Vec<BlockKind>) -> Result<Self, ExperimentError> {
        missing_blocks.sort();
        missing_blocks.dedup();
        let s = Self { preset, missing_blocks };
        s.segment()?;
        Ok(s)
    }

    /// The single contiguous software segment covering the missing blocks.
    pub fn segment(&self) -> Result<(usize, usize), ExperimentError> {
        let idx: Vec<usize> = self.missing_blocks.iter().map(|k| k.index()).collect();
        let (Some(&first), Some(&last)) = (idx.iter().min(), idx.iter().max()) else {
            return Err(ExperimentError::Scenario("no missing blocks".into()));
        };
        for k in &self.missing_blocks {
            if !self.preset.pipeline.is_enabled(*k) {
                return Err(ExperimentError::Scenario(format!("{k} is not used by preset {}", self.preset.id)));
            }
        }
        // Blocks strictly inside the span must either be missing too or be
        // unused; otherwise the software would need two segments.
        for i in first..=last {
            let k = BlockKind::ALL[i];
            if self.preset.pipeline.is_enabled(k) && !self.missing_blocks.contains(&k) {
                return Err(ExperimentError::Scenario(format!(
                    "missing blocks are not contiguous: {k} sits between them"
                )));
            }
        }
        Ok((first, last))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrofitRow {
    pub preset_id: u8,
    pub sw_first: usize,
    pub sw_last: usize,
    pub buffer_words: usize,
    pub baseline_gated: f64,
    pub retrofit_gated: f64,
    /// Baseline minus retrofit gated fraction.
    pub delta: f64,
    pub underrun: bool,
    pub iq_identical: bool,
    pub boundary_rate: f64,
}

pub fn retrofit_run(
    scenario: &RetrofitScenario,
    buffers: &[usize],
    packet: &[u8],
    cost: &CostModel,
    dac_ring: usize,
) -> Result<Vec<RetrofitRow>, ExperimentError> {
    let (first, last) = scenario.segment()?;
    let p = &scenario.preset;
    let hardware = run_pipeline(&p.pipeline, packet)?;
    let baseline = simulate(p, &SplitPlan::hardware(), packet, cost, dac_ring)?;
    let mut rows = Vec::with_capacity(buffers.len());
    for &b in buffers {
        let plan = SplitPlan::software(first, last, b);
        let out = split_execute(&p.pipeline, &plan, packet)?.output;
        let r = simulate(p, &plan, packet, cost, dac_ring)?;
        rows.push(RetrofitRow {
            preset_id: p.id,
            sw_first: first,
            sw_last: last,
            buffer_words: b,
            baseline_gated: baseline.gated_fraction,
            retrofit_gated: r.gated_fraction,
            delta: baseline.gated_fraction - r.gated_fraction,
            underrun: r.underrun,
            iq_identical: out.bit_identical(&hardware),
            boundary_rate: r.boundary_rate.unwrap_or(0.0),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::preset;

    #[test]
    fn standard_segments() {
        let seg = |id| RetrofitScenario::standard(preset(id).unwrap()).segment().unwrap();
        assert_eq!(seg(1), (7, 8));
        assert_eq!(seg(4), (3, 3));
        assert_eq!(seg(6), (1, 2));
    }

    #[test]
    fn split_scenarios_rejected() {
        let p = preset(1).unwrap();
        assert!(RetrofitScenario::new(p.clone(), vec![BlockKind::Chip, BlockKind::Fir]).is_err());
        assert!(RetrofitScenario::new(p.clone(), vec![BlockKind::Diffenc]).is_err());
        assert!(RetrofitScenario::new(p, vec![BlockKind::Mapper, BlockKind::Fir]).is_ok());
    }
}
