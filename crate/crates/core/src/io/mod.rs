//! IQ sample files, the golden-vector corpus and packet inputs.
//!
//! # IQ file layout
//!
//! All fields little-endian.
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 8 | magic `HYBRIDIQ` |
//! | 8  | 2 | version, 1 |
//! | 10 | 2 | format: 1 = cf32, 2 = ci16 |
//! | 12 | 2 | preset id (0 when none) |
//! | 14 | 2 | reserved, 0 |
//! | 16 | 8 | sample rate, Hz |
//! | 24 | 8 | sample count |
//! | 32 | n | interleaved I, Q |

mod golden;
mod iq;

use std::path::Path;

use thiserror::Error;

pub use golden::{
    bundled_manifest, verify_golden, verify_vector, GoldenManifest, GoldenReport, GoldenResult, GoldenVector,
};
pub use iq::{
    decode_iq, encode_iq, from_i16, read_iq, to_i16, write_iq, IqFormat, IqHeader, I16_SCALE, IQ_HEADER_LEN, IQ_MAGIC,
    IQ_VERSION,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("truncated file: need {expected} bytes, have {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("bad magic, not an IQ file")]
    BadMagic,
    #[error("unsupported IQ file version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown IQ format code {0}")]
    UnknownFormat(u16),
    #[error("unknown IQ format {0:?} (expected cf32 or ci16)")]
    UnknownFormatName(String),
    #[error("header declares {declared} samples, payload holds {actual}")]
    CountMismatch { declared: u64, actual: u64 },
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("{path}: {message}")]
    Manifest { path: String, message: String },
    #[error("{path}: {source}")]
    At {
        path: String,
        #[source]
        source: Box<IoError>,
    },
    #[error("packet: {0}")]
    Packet(String),
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Attaches a file path to a format error.
    pub fn at(self, path: &Path) -> Self {
        match self {
            e @ (IoError::Io { .. } | IoError::At { .. } | IoError::Manifest { .. }) => e,
            e => IoError::At {
                path: path.display().to_string(),
                source: Box::new(e),
            },
        }
    }

    /// The underlying format error with any path wrapper removed.
    pub fn root(&self) -> &IoError {
        match self {
            IoError::At { source, .. } => source.root(),
            e => e,
        }
    }
}

/// Parses a packet given as hex text; whitespace and an optional `0x` prefix are ignored.
pub fn parse_packet_hex(text: &str) -> Result<Vec<u8>, IoError> {
    let t: String = text.split_whitespace().collect();
    let t = t.strip_prefix("0x").unwrap_or(&t);
    let bytes = hex::decode(t).map_err(|e| IoError::Packet(e.to_string()))?;
    if bytes.is_empty() {
        return Err(IoError::Packet("empty packet".into()));
    }
    Ok(bytes)
}

/// Reads a packet file: hex text when the extension is `.hex`, raw bytes otherwise.
pub fn read_packet(path: &Path) -> Result<Vec<u8>, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    let packet = if path.extension().is_some_and(|e| e == "hex") {
        let text = String::from_utf8(bytes).map_err(|e| IoError::Packet(e.to_string()))?;
        parse_packet_hex(&text).map_err(|e| e.at(path))?
    } else {
        bytes
    };
    if packet.is_empty() {
        return Err(IoError::Packet(format!("{}: empty packet", path.display())));
    }
    Ok(packet)
}
