//! Experiment drivers: gating sweep, minimum-buffer law, retrofit.

mod export;
mod fit;
mod retrofit;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use export::{export_results, read_points_csv, write_csv, ExportError, ResultRow, Tables, BUNDLED_FIG7_SYNTHETIC};
pub use fit::{power_law_fit, FitError, FitResult};
pub use retrofit::{retrofit_run, unique_blocks, RetrofitRow, RetrofitScenario};
pub use search::{min_buffer_for, min_buffer_search, MinBuffer, MIN_BUFFER_CAP};

use crate::hybrid::HybridError;
use crate::phy::{BlockKind, Pn9};
use crate::pipeline::{rate_profile, PipelineError, StandardPreset};
use crate::timing::{CostModel, SimError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("retrofit scenario: {0}")]
    Scenario(String),
}

/// Buffer sizes of the gating sweep, in words.
pub const SWEEP_BUFFERS: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];

/// Length of the default experiment packet: a maximum-size PSDU.
pub const DEFAULT_PACKET_LEN: usize = 127;

/// Seed of the default experiment packet.
pub const DEFAULT_PACKET_SEED: u16 = 0x0a5;

/// Deterministic pseudo-random payload: PN9 output packed LSB first.
pub fn pn9_packet(len: usize, seed: u16) -> Result<Vec<u8>, crate::phy::BlockError> {
    let mut lfsr = Pn9::new(seed)?;
    Ok((0..len)
        .map(|_| (0..8).fold(0u8, |byte, i| byte | (lfsr.next_bit() << i)))
        .collect())
}

/// The default experiment payload of `len` bytes.
pub fn experiment_packet(len: usize) -> Vec<u8> {
    pn9_packet(len, DEFAULT_PACKET_SEED).expect("valid seed")
}

/// Single-block software segments over the enabled stages of a preset.
pub fn single_block_segments(preset: &StandardPreset) -> Vec<(usize, usize)> {
    preset
        .pipeline
        .enabled_kinds()
        .into_iter()
        .map(|k| (k.index(), k.index()))
        .collect()
}

/// One point of the buffer-size versus data-rate relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinBufferPoint {
    pub preset_id: u8,
    pub sw_first: usize,
    pub sw_last: usize,
    /// Bus words per second crossing the segment's two interposers.
    pub boundary_rate: f64,
    pub min_buffer: MinBuffer,
}

impl MinBufferPoint {
    pub fn label(&self) -> String {
        let k = |i: usize| BlockKind::ALL[i].name();
        if self.sw_first == self.sw_last {
            format!("p{}:{}", self.preset_id, k(self.sw_first))
        } else {
            format!("p{}:{}-{}", self.preset_id, k(self.sw_first), k(self.sw_last))
        }
    }
}

/// Minimum buffer for every (preset, segment) pair in `grid`.
pub fn min_buffer_points(
    grid: &[(StandardPreset, (usize, usize))],
    packet: &[u8],
    cost: &CostModel,
    dac_ring: usize,
    cap: usize,
) -> Result<Vec<MinBufferPoint>, ExperimentError> {
    use rayon::prelude::*;
    let mut pts: Vec<MinBufferPoint> = grid
        .par_iter()
        .map(|(p, seg)| -> Result<MinBufferPoint, ExperimentError> {
            let profile = rate_profile(&p.pipeline, p)?;
            let rate = profile.segment_traffic(seg.0, seg.1);
            Ok(MinBufferPoint {
                preset_id: p.id,
                sw_first: seg.0,
                sw_last: seg.1,
                boundary_rate: *rate.numer() as f64 / *rate.denom() as f64,
                min_buffer: min_buffer_for(p, *seg, packet, cost, dac_ring, cap)?,
            })
        })
        .collect::<Result<_, _>>()?;
    pts.sort_by(|a, b| (a.preset_id, a.sw_first, a.sw_last).cmp(&(b.preset_id, b.sw_first, b.sw_last)));
    Ok(pts)
}
