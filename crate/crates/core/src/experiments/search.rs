use serde::{Deserialize, Serialize};

use crate::hybrid::SplitPlan;
use crate::pipeline::StandardPreset;
use crate::timing::{simulate, CostModel, SimError};

/// Default upper bound for the buffer search, in words.
pub const MIN_BUFFER_CAP: usize = 65_536;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinBuffer {
    Found(usize),
    /// Even `cap` words underrun: software cannot keep up at this rate.
    CannotKeepUp { cap: usize },
}

impl MinBuffer {
    pub fn found(self) -> Option<usize> {
        match self {
            MinBuffer::Found(b) => Some(b),
            MinBuffer::CannotKeepUp { .. } => None,
        }
    }
}

/// Smallest `b` in `1..=cap` for which `underruns(b)` is false, assuming
/// underrun is monotone in buffer size. Doubles from 1 until a safe size
/// appears, then bisects the last gap.
pub fn min_buffer_search<E>(
    mut underruns: impl FnMut(usize) -> Result<bool, E>,
    cap: usize,
) -> Result<MinBuffer, E> {
    assert!(cap >= 1, "search cap must be at least 1");
    let mut lo = 0; // largest size known to underrun (0 = none)
    let mut hi = 1;
    loop {
        if !underruns(hi)? {
            break;
        }
        if hi == cap {
            return Ok(MinBuffer::CannotKeepUp { cap });
        }
        lo = hi;
        hi = (hi * 2).min(cap);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if underruns(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MinBuffer::Found(hi))
}

/// Minimum interposer buffer for `segment` of `preset` to avoid underrun.
pub fn min_buffer_for(
    preset: &StandardPreset,
    segment: (usize, usize),
    packet: &[u8],
    cost: &CostModel,
    dac_ring: usize,
    cap: usize,
) -> Result<MinBuffer, SimError> {
    min_buffer_search(
        |b| {
            let plan = SplitPlan::software(segment.0, segment.1, b);
            simulate(preset, &plan, packet, cost, dac_ring).map(|r| r.underrun)
        },
        cap,
    )
}
