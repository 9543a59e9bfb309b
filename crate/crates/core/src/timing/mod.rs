//! Cycle-level timing of hybrid runs: cost model, DAC replay, phase
//! accounting and the block-by-buffer gating sweep.

mod cost;
mod sim;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::CostModel;
pub use sim::{rate_rows, simulate, Phase, PhaseAccount, RateRow, RunReport, DEFAULT_DAC_RING};

use crate::hybrid::{HybridError, SplitPlan};
use crate::phy::BlockKind;
use crate::pipeline::{PipelineError, StandardPreset};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Hybrid(#[from] HybridError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("cost model: {0}")]
    Cost(String),
    #[error("DAC ring must hold at least one sample")]
    ZeroRing,
    #[error("pipeline output is not an IQ stream; nothing for the DAC to play")]
    NotIq,
    #[error("phase accounting does not close: phases {phases} vs total {total}")]
    Accounting { phases: u64, total: u64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseShare {
    pub phase: String,
    pub cycles: u64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBreakdown {
    pub total_cycles: u64,
    /// The seven CPU phases followed by a "Gated" row.
    pub phases: Vec<PhaseShare>,
    pub dsp_by_kind: BTreeMap<BlockKind, u64>,
}

/// Per-phase totals and shares of a finished run.
pub fn phase_report(report: &RunReport) -> PhaseBreakdown {
    let total = report.phases.total();
    let share = |c: u64| if total == 0 { 0.0 } else { c as f64 / total as f64 };
    let mut phases: Vec<PhaseShare> = Phase::ALL
        .iter()
        .map(|p| {
            let c = report.phases.get(*p);
            PhaseShare {
                phase: p.name().to_string(),
                cycles: c,
                fraction: share(c),
            }
        })
        .collect();
    phases.push(PhaseShare {
        phase: "Gated".to_string(),
        cycles: report.phases.gated,
        fraction: share(report.phases.gated),
    });
    PhaseBreakdown {
        total_cycles: total,
        phases,
        dsp_by_kind: report.phases.dsp_by_kind.clone(),
    }
}

/// One cell of the gating sweep. `segment` is `None` for the hardware baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub preset_id: u8,
    pub segment: Option<(usize, usize)>,
    pub buffer_words: usize,
    pub gated_fraction: f64,
    pub gated_fraction_after_init: f64,
    pub underrun: bool,
    pub boundary_rate: Option<f64>,
    pub total_cycles: u64,
}

/// Runs `simulate` for every (segment, buffer) pair plus one hardware
/// baseline row. Rows come back sorted by segment then buffer regardless of
/// `parallel`.
pub fn gated_sweep(
    preset: &StandardPreset,
    buffers: &[usize],
    segments: &[(usize, usize)],
    packet: &[u8],
    cost: &CostModel,
    dac_ring: usize,
    parallel: bool,
) -> Result<Vec<SweepRow>, SimError> {
    let mut plans = vec![SplitPlan::hardware()];
    for &(f, l) in segments {
        for &b in buffers {
            plans.push(SplitPlan::software(f, l, b));
        }
    }
    let run = |plan: &SplitPlan| -> Result<SweepRow, SimError> {
        let r = simulate(preset, plan, packet, cost, dac_ring)?;
        Ok(SweepRow {
            preset_id: preset.id,
            segment: plan.segment,
            buffer_words: if plan.segment.is_some() { plan.buffer_words } else { 0 },
            gated_fraction: r.gated_fraction,
            gated_fraction_after_init: r.gated_fraction_after_init,
            underrun: r.underrun,
            boundary_rate: r.boundary_rate,
            total_cycles: r.total_cycles,
        })
    };
    let mut rows: Vec<SweepRow> = if parallel {
        plans.par_iter().map(run).collect::<Result<_, _>>()?
    } else {
        plans.iter().map(run).collect::<Result<_, _>>()?
    };
    rows.sort_by_key(|r| (r.segment, r.buffer_words));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::preset;

    #[test]
    fn breakdown_closes() {
        let p = preset(6).unwrap();
        let r = simulate(&p, &SplitPlan::software(1, 2, 32), b"abcdef", &CostModel::default(), 64).unwrap();
        let b = phase_report(&r);
        assert_eq!(b.phases.iter().map(|s| s.cycles).sum::<u64>(), b.total_cycles);
        assert!((b.phases.iter().map(|s| s.fraction).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hardware_breakdown_has_only_init() {
        let p = preset(2).unwrap();
        let r = simulate(&p, &SplitPlan::hardware(), b"xyz", &CostModel::default(), 64).unwrap();
        let b = phase_report(&r);
        for s in &b.phases {
            if s.phase != "Init" && s.phase != "End" && s.phase != "Gated" {
                assert_eq!(s.cycles, 0, "{}", s.phase);
            }
        }
    }

    #[test]
    fn sweep_order_is_stable() {
        let p = preset(1).unwrap();
        let c = CostModel::default();
        let a = gated_sweep(&p, &[64, 16], &[(8, 8), (6, 6)], b"0123", &c, 512, false).unwrap();
        let b = gated_sweep(&p, &[64, 16], &[(8, 8), (6, 6)], b"0123", &c, 512, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert_eq!(a[0].segment, None);
        assert_eq!((a[1].segment, a[1].buffer_words), (Some((6, 6)), 16));
    }
}
