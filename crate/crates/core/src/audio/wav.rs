//! Minimal RIFF/WAVE reader and writer for 16-bit linear PCM.

use super::{AudioClip, AudioError, RawAudioFile, MAX_SAMPLE_RATE_HZ, MIN_SAMPLE_RATE_HZ};

const WAVE_FORMAT_PCM: u16 = 0x0001;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy)]
struct FormatChunk {
    format_tag: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
    block_align: u16,
}

/// Returns true when `bytes` starts with a `RIFF....WAVE` header.
pub fn has_wav_magic(bytes: &[u8]) -> bool {
    bytes.len() >= 12 && &bytes[0..4] == b"RIFF" && &bytes[8..12] == b"WAVE"
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn parse_format(body: &[u8]) -> Result<FormatChunk, AudioError> {
    if body.len() < 16 {
        return Err(AudioError::MalformedContainer(format!(
            "fmt chunk is {} bytes, expected at least 16",
            body.len()
        )));
    }
    let mut format_tag = read_u16(body, 0);
    if format_tag == WAVE_FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the sub-format GUID whose
        // first two bytes carry the real format tag.
        if body.len() < 40 {
            return Err(AudioError::MalformedContainer(
                "truncated WAVE_FORMAT_EXTENSIBLE fmt chunk".into(),
            ));
        }
        format_tag = read_u16(body, 24);
    }
    Ok(FormatChunk {
        format_tag,
        channels: read_u16(body, 2),
        sample_rate: read_u32(body, 4),
        block_align: read_u16(body, 12),
        bits_per_sample: read_u16(body, 14),
    })
}

/// Decodes a RIFF/WAVE PCM-16 file into a mono [`AudioClip`] at the file's
/// native rate. Stereo frames are averaged, rounding half away from zero.
pub fn decode_wav(file: &RawAudioFile) -> Result<AudioClip, AudioError> {
    let bytes = file.bytes();
    if !has_wav_magic(bytes) {
        return Err(AudioError::MalformedContainer("missing RIFF/WAVE header".into()));
    }

    let mut format: Option<FormatChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut cursor = 12usize;
    while cursor + 8 <= bytes.len() {
        let id = &bytes[cursor..cursor + 4];
        let size = read_u32(bytes, cursor + 4) as usize;
        let body_start = cursor + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|end| *end <= bytes.len())
            .ok_or_else(|| {
                AudioError::MalformedContainer(format!(
                    "chunk '{}' declares {} bytes but only {} remain",
                    String::from_utf8_lossy(id),
                    size,
                    bytes.len() - body_start
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => format = Some(parse_format(body)?),
            b"data" => {
                data = Some(body);
                // Some writers leave trailing junk after data; nothing past it matters.
                if format.is_some() {
                    break;
                }
            }
            _ => {}
        }
        // Chunks are word aligned.
        cursor = body_end + (size & 1);
    }

    let format = format.ok_or_else(|| AudioError::MalformedContainer("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::MalformedContainer("no data chunk".into()))?;

    if format.format_tag != WAVE_FORMAT_PCM {
        return Err(AudioError::UnsupportedEncoding(format!(
            "format tag 0x{:04x} is not linear PCM",
            format.format_tag
        )));
    }
    if format.bits_per_sample != 16 {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{} bits per sample, only 16 is supported",
            format.bits_per_sample
        )));
    }
    if !(1..=2).contains(&format.channels) {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{} channels, only mono and stereo are supported",
            format.channels
        )));
    }
    if !(MIN_SAMPLE_RATE_HZ..=MAX_SAMPLE_RATE_HZ).contains(&format.sample_rate) {
        return Err(AudioError::UnsupportedEncoding(format!(
            "sample rate {} Hz outside {}..={}",
            format.sample_rate, MIN_SAMPLE_RATE_HZ, MAX_SAMPLE_RATE_HZ
        )));
    }
    let frame_bytes = 2 * format.channels as usize;
    if format.block_align as usize != frame_bytes {
        return Err(AudioError::MalformedContainer(format!(
            "block align {} does not match {} channel(s) of 16-bit samples",
            format.block_align, format.channels
        )));
    }

    let samples: Vec<i16> = match format.channels {
        1 => data.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]])).collect(),
        _ => data
            .chunks_exact(4)
            .map(|b| {
                let left = i16::from_le_bytes([b[0], b[1]]) as i32;
                let right = i16::from_le_bytes([b[2], b[3]]) as i32;
                mean_round(left, right)
            })
            .collect(),
    };

    AudioClip::new(samples, format.sample_rate)
}

/// Mean of two samples, rounded to nearest with ties away from zero.
fn mean_round(a: i32, b: i32) -> i16 {
    let sum = a + b;
    let mean = if sum >= 0 { (sum + 1) / 2 } else { (sum - 1) / 2 };
    mean as i16
}

/// Serializes a clip as a canonical 44-byte-header mono PCM-16 WAV file.
///
/// The output is a pure function of the samples and rate, which makes it
/// suitable as the input to content digests.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.samples().len() * 2;
    let rate = clip.sample_rate_hz();
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in clip.samples() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Builds an interleaved PCM-16 WAV with an arbitrary channel count.
/// Used by tests and fixture tooling to produce stereo inputs.
pub fn encode_interleaved_wav(interleaved: &[i16], channels: u16, sample_rate_hz: u32) -> Vec<u8> {
    let data_len = interleaved.len() * 2;
    let block_align = channels * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(sample_rate_hz * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in interleaved {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}
