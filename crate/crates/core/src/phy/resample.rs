//! Zero padding and Q-rail offset.

use super::BlockError;
use crate::stream::{IqStream, Sample};

const ZERO: Sample = Sample { re: 0.0, im: 0.0 };

/// Emits `n_zeros` zero samples after every `every_m` input samples.
/// A trailing partial group is passed through without padding.
pub fn zpad(samples: &[Sample], n_zeros: usize, every_m: usize) -> Result<IqStream, BlockError> {
    if every_m == 0 {
        return Err(BlockError::ZeroPadPeriod);
    }
    let mut out = Vec::with_capacity(samples.len() + samples.len() / every_m * n_zeros);
    for group in samples.chunks(every_m) {
        out.extend_from_slice(group);
        if group.len() == every_m {
            out.extend(std::iter::repeat(ZERO).take(n_zeros));
        }
    }
    Ok(out)
}

/// Delays the Q rail by `delay` samples. The stream grows by `delay` samples
/// carrying the Q tail with I = 0.
pub fn offset_q(samples: &[Sample], delay: usize) -> IqStream {
    let n = samples.len() + delay;
    (0..n)
        .map(|k| {
            let i = if k < samples.len() { samples[k].re } else { 0.0 };
            let q = if k >= delay { samples[k - delay].im } else { 0.0 };
            Sample::new(i, q)
        })
        .collect()
}
