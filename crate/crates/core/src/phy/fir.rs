//! 41-tap real-coefficient FIR applied independently to both rails.

use std::path::Path;
use std::sync::Arc;

use super::BlockError;
use crate::stream::{IqStream, Sample};

pub const FIR_TAPS: usize = 41;

const HALF_SINE: &str = include_str!("../../data/taps/half_sine.txt");
const RAISED_COSINE: &str = include_str!("../../data/taps/raised_cosine.txt");

/// A validated set of exactly [`FIR_TAPS`] coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Taps {
    name: String,
    coeffs: Arc<[f64]>,
}

impl Taps {
    pub fn new(name: impl Into<String>, coeffs: Vec<f64>) -> Result<Self, BlockError> {
        if coeffs.len() != FIR_TAPS {
            return Err(BlockError::TapCount(coeffs.len()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(BlockError::NonFiniteTap);
        }
        Ok(Self {
            name: name.into(),
            coeffs: coeffs.into(),
        })
    }

    /// One real per line; blank lines and `#` comments ignored.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self, BlockError> {
        let coeffs = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<f64>().map_err(|_| BlockError::BadTapValue(l.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(name, coeffs)
    }

    pub fn load(path: &Path) -> Result<Self, BlockError> {
        let text = std::fs::read_to_string(path).map_err(|e| BlockError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(path.display().to_string(), &text)
    }

    /// Half-sine pulse, L1-normalized (O-QPSK default).
    pub fn half_sine() -> Self {
        Self::parse("half-sine", HALF_SINE).expect("bundled half-sine taps")
    }

    /// Raised cosine with roll-off 1.0 at 4 samples per chip, L1-normalized (BPSK default).
    pub fn raised_cosine() -> Self {
        Self::parse("raised-cosine", RAISED_COSINE).expect("bundled raised-cosine taps")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "half-sine" => Some(Self::half_sine()),
            "raised-cosine" => Some(Self::raised_cosine()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn dc_gain(&self) -> f64 {
        self.coeffs.iter().sum()
    }
}

/// Direct-form convolution with zero initial history.
///
/// Output length equals input length, or input length + 40 when `flush_tail` is set.
pub fn fir41(samples: &[Sample], taps: &Taps, flush_tail: bool) -> IqStream {
    let h = taps.coeffs();
    let n_out = samples.len() + if flush_tail { FIR_TAPS - 1 } else { 0 };
    let at = |idx: isize| -> Sample {
        if idx < 0 || idx as usize >= samples.len() {
            Sample::new(0.0, 0.0)
        } else {
            samples[idx as usize]
        }
    };
    (0..n_out)
        .map(|n| {
            let mut i_acc = 0.0f64;
            let mut q_acc = 0.0f64;
            for (k, &c) in h.iter().enumerate() {
                let x = at(n as isize - k as isize);
                i_acc += c * x.re;
                q_acc += c * x.im;
            }
            Sample::new(i_acc, q_acc)
        })
        .collect()
}
