//! Two reference consultations (a gastritis visit and a migraine visit)
//! with their transcripts and summaries, plus deterministic stand-in
//! recordings of matching length. Used by tests, the bench command and the
//! fixture generator.

use std::f64::consts::TAU;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{resample, AudioClip, TRANSCRIPTION_RATE_HZ};
use crate::digest::ContentDigest;
use crate::summarizer::{FixtureChat, FixtureReply};
use crate::transcription::FixtureTranscriber;

/// Rate of the synthesized recordings, as a browser would capture them.
pub const RECORDING_RATE_HZ: u32 = 44_100;

pub const TRANSCRIPTS_FILE: &str = "transcripts.json";
pub const SUMMARIES_FILE: &str = "summaries.json";

#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub name: &'static str,
    pub duration_s: f64,
    seed: u64,
    transcript: &'static str,
    summary_json: &'static str,
    /// The summarizer reply arrives wrapped in prose and a code fence.
    chatty_reply: bool,
}

pub const SCENARIOS: [Scenario; 2] = [
    Scenario {
        name: "scenario1",
        duration_s: 332.0,
        seed: 1,
        transcript: include_str!("../fixtures/scenario1_transcript.txt"),
        summary_json: include_str!("../fixtures/scenario1_summary.json"),
        chatty_reply: false,
    },
    Scenario {
        name: "scenario2",
        duration_s: 384.0,
        seed: 2,
        transcript: include_str!("../fixtures/scenario2_transcript.txt"),
        summary_json: include_str!("../fixtures/scenario2_summary.json"),
        chatty_reply: true,
    },
];

impl Scenario {
    pub fn transcript(&self) -> &'static str {
        self.transcript.trim_end()
    }

    pub fn summary_json(&self) -> &'static str {
        self.summary_json
    }

    /// What the fixture summarizer answers for this transcript.
    pub fn summarizer_reply(&self) -> String {
        if self.chatty_reply {
            format!(
                "Berikut ringkasan anamnesis dalam format JSON:\n\n```json\n{}\n```\n\nSemoga membantu.",
                self.summary_json.trim()
            )
        } else {
            self.summary_json.trim().to_string()
        }
    }

    pub fn recording(&self) -> AudioClip {
        synth_recording(self.duration_s, RECORDING_RATE_HZ, self.seed)
    }

    /// Digest of the recording after normalization to the transcription rate.
    pub fn audio_digest(&self) -> ContentDigest {
        resample(&self.recording(), TRANSCRIPTION_RATE_HZ).digest()
    }
}

/// Deterministic speech-like signal: voiced syllables with a wandering
/// pitch and a few harmonics, separated by short pauses, over low noise.
/// Peaks stay below 8000 so quality checks never see clipping.
pub fn synth_recording(duration_s: f64, sample_rate_hz: u32, seed: u64) -> AudioClip {
    let rate = sample_rate_hz as f64;
    let total = (duration_s * rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(total);
    let mut phase = 0.0f64;

    while samples.len() < total {
        let len = ((rng.random_range(0.08..0.30) * rate) as usize).min(total - samples.len());
        let voiced = rng.random_bool(0.8);
        let f_start: f64 = rng.random_range(110.0..240.0);
        let f_end = f_start * rng.random_range(0.85..1.15);
        for i in 0..len {
            let t = i as f64 / len as f64;
            let noise: f64 = rng.random_range(-200.0..200.0);
            let voice = if voiced {
                phase = (phase + TAU * (f_start + (f_end - f_start) * t) / rate) % TAU;
                let envelope = (std::f64::consts::PI * t).sin();
                // sin(kφ) by the Chebyshev recurrence, one sin/cos per sample.
                let (s1, c1) = phase.sin_cos();
                let (mut prev, mut cur, mut harmonics) = (0.0, s1, s1);
                for k in 2..=6 {
                    (prev, cur) = (cur, 2.0 * c1 * cur - prev);
                    harmonics += cur / k as f64;
                }
                2500.0 * envelope * harmonics
            } else {
                0.0
            };
            samples.push((voice + noise).round() as i16);
        }
    }
    AudioClip::new(samples, sample_rate_hz).expect("synthesized rate is supported")
}

/// Fixture backends that know every scenario.
pub fn fixture_backends() -> (FixtureTranscriber, FixtureChat) {
    let transcripts = FixtureTranscriber::new();
    let summaries = FixtureChat::new();
    for s in &SCENARIOS {
        transcripts
            .register(s.audio_digest(), s.transcript())
            .expect("scenario digests are distinct");
        summaries
            .register(
                ContentDigest::of_text(s.transcript()),
                FixtureReply::Single(s.summarizer_reply()),
            )
            .expect("scenario transcripts are distinct");
    }
    (transcripts, summaries)
}

#[derive(Debug, Clone)]
pub struct FixtureDir {
    pub transcripts: PathBuf,
    pub summaries: PathBuf,
    /// One WAV per scenario, in [`SCENARIOS`] order.
    pub recordings: Vec<PathBuf>,
}

/// Writes `<name>.wav` for each scenario plus the two registry files.
pub fn write_fixture_dir(dir: &Path) -> io::Result<FixtureDir> {
    std::fs::create_dir_all(dir)?;
    let (transcripts, summaries) = fixture_backends();
    let out = FixtureDir {
        transcripts: dir.join(TRANSCRIPTS_FILE),
        summaries: dir.join(SUMMARIES_FILE),
        recordings: SCENARIOS.iter().map(|s| dir.join(format!("{}.wav", s.name))).collect(),
    };
    std::fs::write(&out.transcripts, transcripts.to_json())?;
    std::fs::write(&out.summaries, summaries.to_json())?;
    for (s, path) in SCENARIOS.iter().zip(&out.recordings) {
        std::fs::write(path, s.recording().to_wav())?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{assess_quality, QualityPolicy};
    use crate::summarizer::validate_summary;

    #[test]
    fn synth_is_deterministic_and_unclipped() {
        let a = synth_recording(12.0, 16_000, 7);
        let b = synth_recording(12.0, 16_000, 7);
        assert_eq!(a, b);
        assert_ne!(a, synth_recording(12.0, 16_000, 8));
        assert_eq!(a.samples().len(), 192_000);
        assert!(a.samples().iter().all(|s| s.unsigned_abs() < 8000));
        assert!(assess_quality(&a, &QualityPolicy::default()).passes);
    }

    #[test]
    fn scenario_texts() {
        assert!(SCENARIOS[0]
            .transcript()
            .starts_with("Assalamualaikum Bu, selamat pagi silahkan duduk"));
        assert!(SCENARIOS[1].transcript().contains("saya Ibu Desi"));
        for s in &SCENARIOS {
            validate_summary(s.summary_json()).unwrap();
        }
        assert!(SCENARIOS[1].summarizer_reply().contains("```json"));
    }
}
