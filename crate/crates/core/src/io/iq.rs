use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::stream::{IqStream, Sample};

pub const IQ_MAGIC: [u8; 8] = *b"HYBRIDIQ";
pub const IQ_VERSION: u16 = 1;
pub const IQ_HEADER_LEN: usize = 32;

/// Full-scale int16 value; +1.0 and -1.0 map to +32767 and -32767.
pub const I16_SCALE: f64 = 32767.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IqFormat {
    /// Interleaved little-endian f32 I, Q.
    Cf32,
    /// Interleaved little-endian i16 I, Q scaled by 32767.
    Ci16,
}

impl IqFormat {
    pub fn code(self) -> u16 {
        match self {
            IqFormat::Cf32 => 1,
            IqFormat::Ci16 => 2,
        }
    }

    pub fn from_code(code: u16) -> Result<Self, IoError> {
        match code {
            1 => Ok(IqFormat::Cf32),
            2 => Ok(IqFormat::Ci16),
            c => Err(IoError::UnknownFormat(c)),
        }
    }

    pub fn bytes_per_sample(self) -> usize {
        match self {
            IqFormat::Cf32 => 8,
            IqFormat::Ci16 => 4,
        }
    }

    pub fn is_fixed_point(self) -> bool {
        self == IqFormat::Ci16
    }
}

impl std::str::FromStr for IqFormat {
    type Err = IoError;

    fn from_str(s: &str) -> Result<Self, IoError> {
        match s {
            "cf32" => Ok(IqFormat::Cf32),
            "ci16" => Ok(IqFormat::Ci16),
            other => Err(IoError::UnknownFormatName(other.to_string())),
        }
    }
}

impl std::fmt::Display for IqFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IqFormat::Cf32 => "cf32",
            IqFormat::Ci16 => "ci16",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IqHeader {
    pub format: IqFormat,
    pub preset_id: u16,
    pub sample_rate: u64,
    pub item_count: u64,
}

impl IqHeader {
    pub fn to_bytes(&self) -> [u8; IQ_HEADER_LEN] {
        let mut h = [0u8; IQ_HEADER_LEN];
        h[0..8].copy_from_slice(&IQ_MAGIC);
        h[8..10].copy_from_slice(&IQ_VERSION.to_le_bytes());
        h[10..12].copy_from_slice(&self.format.code().to_le_bytes());
        h[12..14].copy_from_slice(&self.preset_id.to_le_bytes());
        // 14..16 reserved, zero
        h[16..24].copy_from_slice(&self.sample_rate.to_le_bytes());
        h[24..32].copy_from_slice(&self.item_count.to_le_bytes());
        h
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, IoError> {
        if bytes.len() < IQ_HEADER_LEN {
            return Err(IoError::Truncated {
                expected: IQ_HEADER_LEN as u64,
                actual: bytes.len() as u64,
            });
        }
        if bytes[0..8] != IQ_MAGIC {
            return Err(IoError::BadMagic);
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
        let version = u16_at(8);
        if version != IQ_VERSION {
            return Err(IoError::UnsupportedVersion(version));
        }
        Ok(Self {
            format: IqFormat::from_code(u16_at(10))?,
            preset_id: u16_at(12),
            sample_rate: u64_at(16),
            item_count: u64_at(24),
        })
    }
}

/// Int16 quantization: scale by 32767, round half away from zero, clamp.
pub fn to_i16(v: f64) -> i16 {
    (v * I16_SCALE).round().clamp(-I16_SCALE, I16_SCALE) as i16
}

pub fn from_i16(v: i16) -> f64 {
    f64::from(v) / I16_SCALE
}

/// Serializes a header and payload. Non-finite samples are rejected.
pub fn encode_iq(samples: &[Sample], format: IqFormat, preset_id: u16, sample_rate: u64) -> Result<Vec<u8>, IoError> {
    if let Some(k) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
        return Err(IoError::NonFinite(k));
    }
    let header = IqHeader {
        format,
        preset_id,
        sample_rate,
        item_count: samples.len() as u64,
    };
    let mut out = Vec::with_capacity(IQ_HEADER_LEN + samples.len() * format.bytes_per_sample());
    out.extend_from_slice(&header.to_bytes());
    for s in samples {
        match format {
            IqFormat::Cf32 => {
                out.extend_from_slice(&(s.re as f32).to_le_bytes());
                out.extend_from_slice(&(s.im as f32).to_le_bytes());
            }
            IqFormat::Ci16 => {
                out.extend_from_slice(&to_i16(s.re).to_le_bytes());
                out.extend_from_slice(&to_i16(s.im).to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode_iq(bytes: &[u8]) -> Result<(IqHeader, IqStream), IoError> {
    let header = IqHeader::parse(bytes)?;
    let per = header.format.bytes_per_sample() as u64;
    let payload = &bytes[IQ_HEADER_LEN..];
    let declared = header
        .item_count
        .checked_mul(per)
        .ok_or(IoError::CountMismatch {
            declared: header.item_count,
            actual: payload.len() as u64 / per,
        })?;
    let have = payload.len() as u64;
    if have < declared {
        return Err(IoError::Truncated {
            expected: IQ_HEADER_LEN as u64 + declared,
            actual: bytes.len() as u64,
        });
    }
    if have != declared {
        return Err(IoError::CountMismatch {
            declared: header.item_count,
            actual: have / per,
        });
    }
    let samples = payload
        .chunks_exact(per as usize)
        .map(|c| match header.format {
            IqFormat::Cf32 => Sample::new(
                f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
                f64::from(f32::from_le_bytes([c[4], c[5], c[6], c[7]])),
            ),
            IqFormat::Ci16 => Sample::new(
                from_i16(i16::from_le_bytes([c[0], c[1]])),
                from_i16(i16::from_le_bytes([c[2], c[3]])),
            ),
        })
        .collect();
    Ok((header, samples))
}

pub fn write_iq(
    path: &Path,
    samples: &[Sample],
    format: IqFormat,
    preset_id: u16,
    sample_rate: u64,
) -> Result<(), IoError> {
    let bytes = encode_iq(samples, format, preset_id, sample_rate)?;
    std::fs::write(path, bytes).map_err(|e| IoError::io(path, e))
}

pub fn read_iq(path: &Path) -> Result<(IqHeader, IqStream), IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_iq(&bytes).map_err(|e| e.at(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let h = IqHeader {
            format: IqFormat::Ci16,
            preset_id: 4,
            sample_rate: 1_200_000,
            item_count: 3,
        };
        let b = h.to_bytes();
        assert_eq!(&b[0..8], b"HYBRIDIQ");
        assert_eq!(b[8..16], [1, 0, 2, 0, 4, 0, 0, 0]);
        assert_eq!(u64::from_le_bytes(b[16..24].try_into().unwrap()), 1_200_000);
        assert_eq!(b[24], 3);
        assert_eq!(IqHeader::parse(&b).unwrap(), h);
    }

    #[test]
    fn int16_convention() {
        assert_eq!(to_i16(1.0), 32767);
        assert_eq!(to_i16(-1.0), -32767);
        assert_eq!(to_i16(-2.0), -32767);
        assert_eq!(to_i16(0.5 / I16_SCALE), 1);
        assert_eq!(to_i16(-0.5 / I16_SCALE), -1);
        let enc = encode_iq(&[Sample::new(1.0, -1.0)], IqFormat::Ci16, 1, 1).unwrap();
        assert_eq!(enc[32..], [0xff, 0x7f, 0x01, 0x80]);
    }

    #[test]
    fn empty_round_trip() {
        for f in [IqFormat::Cf32, IqFormat::Ci16] {
            let b = encode_iq(&[], f, 0, 0).unwrap();
            assert_eq!(b.len(), IQ_HEADER_LEN);
            assert!(decode_iq(&b).unwrap().1.is_empty());
        }
    }

    #[test]
    fn malformed_files_rejected() {
        let good = encode_iq(&[Sample::new(0.5, 0.25); 4], IqFormat::Cf32, 1, 8).unwrap();
        assert!(matches!(decode_iq(&good[..20]), Err(IoError::Truncated { .. })));
        assert!(matches!(decode_iq(&good[..good.len() - 1]), Err(IoError::Truncated { .. })));
        let mut extra = good.clone();
        extra.extend_from_slice(&[0; 8]);
        assert!(matches!(
            decode_iq(&extra),
            Err(IoError::CountMismatch { declared: 4, actual: 5 })
        ));
        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(matches!(decode_iq(&magic), Err(IoError::BadMagic)));
        let mut fmt = good.clone();
        fmt[10] = 9;
        assert!(matches!(decode_iq(&fmt), Err(IoError::UnknownFormat(9))));
        let mut ver = good;
        ver[8] = 2;
        assert!(matches!(decode_iq(&ver), Err(IoError::UnsupportedVersion(2))));
        assert!(matches!(
            encode_iq(&[Sample::new(f64::NAN, 0.0)], IqFormat::Cf32, 0, 0),
            Err(IoError::NonFinite(0))
        ));
    }
}
