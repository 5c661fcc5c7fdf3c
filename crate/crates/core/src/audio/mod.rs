//! Audio ingest: decode uploaded WAV files, normalize to 16 kHz mono PCM and
//! gate recordings on a basic quality policy before they reach the paid
//! transcription stage.

mod quality;
mod resample;
mod wav;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::ContentDigest;

pub use quality::{assess_quality, QualityPolicy, QualityReport};
pub use resample::resample;
pub use wav::{decode_wav, encode_interleaved_wav, encode_wav, has_wav_magic};

pub const MIN_SAMPLE_RATE_HZ: u32 = 8_000;
pub const MAX_SAMPLE_RATE_HZ: u32 = 192_000;

/// Rate expected by the transcription backends.
pub const TRANSCRIPTION_RATE_HZ: u32 = 16_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AudioError {
    #[error("malformed container: {0}")]
    MalformedContainer(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("empty audio file")]
    Empty,
    #[error("invalid clip: {0}")]
    InvalidClip(String),
}

impl AudioError {
    pub fn code(&self) -> &'static str {
        match self {
            AudioError::MalformedContainer(_) | AudioError::Empty => "malformed_container",
            AudioError::UnsupportedEncoding(_) => "unsupported_encoding",
            AudioError::InvalidClip(_) => "invalid_clip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Container {
    Wav,
    Unknown,
}

/// An uploaded audio file as received, before decoding.
#[derive(Debug, Clone)]
pub struct RawAudioFile {
    bytes: Vec<u8>,
    declared_container: Container,
    source_name: String,
}

impl RawAudioFile {
    pub fn new(
        bytes: Vec<u8>,
        declared_container: Container,
        source_name: impl Into<String>,
    ) -> Result<Self, AudioError> {
        if bytes.is_empty() {
            return Err(AudioError::Empty);
        }
        if declared_container == Container::Wav && !has_wav_magic(&bytes) {
            return Err(AudioError::MalformedContainer(
                "declared as WAV but the RIFF/WAVE magic is missing".into(),
            ));
        }
        Ok(Self {
            bytes,
            declared_container,
            source_name: source_name.into(),
        })
    }

    /// Declares the container from the file extension (`.wav` → WAV).
    pub fn from_named_bytes(bytes: Vec<u8>, source_name: impl Into<String>) -> Result<Self, AudioError> {
        let source_name = source_name.into();
        let container = if source_name.to_ascii_lowercase().ends_with(".wav") {
            Container::Wav
        } else {
            Container::Unknown
        };
        Self::new(bytes, container, source_name)
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn declared_container(&self) -> Container {
        self.declared_container
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }
}

/// Mono signed 16-bit PCM at a known rate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip {
    samples: Vec<i16>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<i16>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        if !(MIN_SAMPLE_RATE_HZ..=MAX_SAMPLE_RATE_HZ).contains(&sample_rate_hz) {
            return Err(AudioError::InvalidClip(format!(
                "sample rate {sample_rate_hz} Hz outside {MIN_SAMPLE_RATE_HZ}..={MAX_SAMPLE_RATE_HZ}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// SHA-256 of the canonical WAV rendering of this clip.
    pub fn digest(&self) -> ContentDigest {
        ContentDigest::of_bytes(&encode_wav(self))
    }

    pub fn to_wav(&self) -> Vec<u8> {
        encode_wav(self)
    }
}

/// Decodes, gates and resamples an upload to the transcription rate.
pub fn ingest(file: &RawAudioFile, policy: &QualityPolicy) -> Result<(AudioClip, QualityReport), IngestError> {
    let clip = decode_wav(file)?;
    let report = assess_quality(&clip, policy);
    if !report.passes {
        return Err(IngestError::QualityRejected(report.reasons));
    }
    Ok((resample(&clip, TRANSCRIPTION_RATE_HZ), report))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("audio rejected by quality policy: {}", .0.join(", "))]
    QualityRejected(Vec<String>),
}
