use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::iq::{decode_iq, encode_iq, to_i16, IqFormat};
use super::IoError;
use crate::pipeline::{modulate, StandardPreset};

/// One stored reference waveform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenVector {
    pub name: String,
    pub preset_id: u8,
    pub packet_hex: String,
    /// Relative to the manifest's directory.
    pub file: String,
    pub format: IqFormat,
    /// SHA-256 of the whole file as generated.
    pub sha256: String,
    /// Max-abs error allowed for float files; fixed-point files compare exactly.
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenManifest {
    pub vectors: Vec<GoldenVector>,
}

impl GoldenManifest {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| IoError::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenResult {
    pub name: String,
    pub passed: bool,
    /// Stored file matches the manifest digest.
    pub file_digest_ok: bool,
    /// Re-encoding our output reproduces the stored file byte for byte.
    pub regenerated_identical: bool,
    pub samples: usize,
    pub max_abs_error: f64,
    pub mismatched_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenReport {
    pub manifest: PathBuf,
    pub results: Vec<GoldenResult>,
}

impl GoldenReport {
    pub fn all_passed(&self) -> bool {
        !self.results.is_empty() && self.results.iter().all(|r| r.passed)
    }
}

/// Checks one vector against a freshly modulated waveform.
pub fn verify_vector(v: &GoldenVector, dir: &Path, presets: &[StandardPreset]) -> Result<GoldenResult, IoError> {
    let path = dir.join(&v.file);
    let bytes = std::fs::read(&path).map_err(|e| IoError::io(&path, e))?;
    let mut res = GoldenResult {
        name: v.name.clone(),
        passed: false,
        file_digest_ok: hex::encode(Sha256::digest(&bytes)) == v.sha256.to_ascii_lowercase(),
        regenerated_identical: false,
        samples: 0,
        max_abs_error: f64::INFINITY,
        mismatched_samples: 0,
        detail: None,
    };
    let packet = hex::decode(&v.packet_hex).map_err(|e| IoError::Manifest {
        path: v.name.clone(),
        message: format!("packet_hex: {e}"),
    })?;
    let Some(preset) = presets.iter().find(|p| p.id == v.preset_id) else {
        res.detail = Some(format!("unknown preset {}", v.preset_id));
        return Ok(res);
    };
    let (header, expected) = decode_iq(&bytes).map_err(|e| e.at(&path))?;
    if header.format != v.format {
        res.detail = Some(format!("file holds {}, manifest says {}", header.format, v.format));
        return Ok(res);
    }
    let ours = modulate(&preset.pipeline, &packet).map_err(|e| IoError::Manifest {
        path: v.name.clone(),
        message: e.to_string(),
    })?;
    res.samples = ours.len();
    if ours.len() != expected.len() {
        res.detail = Some(format!("{} samples, reference has {}", ours.len(), expected.len()));
        return Ok(res);
    }
    let regen = encode_iq(&ours, v.format, header.preset_id, header.sample_rate)?;
    res.regenerated_identical = regen == bytes;
    let mut max_err = 0.0f64;
    let mut mismatched = 0;
    for (a, b) in ours.iter().zip(&expected) {
        let err = (a.re - b.re).abs().max((a.im - b.im).abs());
        max_err = max_err.max(err);
        let bad = match v.format {
            IqFormat::Ci16 => to_i16(a.re) != to_i16(b.re) || to_i16(a.im) != to_i16(b.im),
            IqFormat::Cf32 => !(err <= v.tolerance),
        };
        mismatched += usize::from(bad);
    }
    res.max_abs_error = max_err;
    res.mismatched_samples = mismatched;
    res.passed = res.file_digest_ok && mismatched == 0;
    if !res.file_digest_ok {
        res.detail = Some("stored file does not match its recorded digest".into());
    } else if mismatched > 0 {
        res.detail = Some(format!("{mismatched} samples outside tolerance"));
    }
    Ok(res)
}

/// Verifies every vector listed in `manifest` against `presets`.
pub fn verify_golden(manifest: &Path, presets: &[StandardPreset]) -> Result<GoldenReport, IoError> {
    let m = GoldenManifest::load(manifest)?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let results = m
        .vectors
        .iter()
        .map(|v| verify_vector(v, dir, presets))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GoldenReport {
        manifest: manifest.to_path_buf(),
        results,
    })
}

/// The corpus shipped in the source tree.
pub fn bundled_manifest() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata/golden/manifest.json")
}
