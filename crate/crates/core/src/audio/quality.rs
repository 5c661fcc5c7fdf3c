use serde::{Deserialize, Serialize};

use super::AudioClip;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityPolicy {
    pub min_s: f64,
    pub max_s: f64,
    pub max_clipping_fraction: f64,
}

impl Default for QualityPolicy {
    fn default() -> Self {
        Self {
            min_s: 10.0,
            max_s: 3600.0,
            max_clipping_fraction: 0.01,
        }
    }
}

impl QualityPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.min_s > 0.0 && self.max_s > 0.0 && self.max_clipping_fraction > 0.0) {
            return Err("quality policy thresholds must be positive".into());
        }
        if self.min_s >= self.max_s {
            return Err(format!(
                "quality policy min_s ({}) must be below max_s ({})",
                self.min_s, self.max_s
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub duration_s: f64,
    pub clipping_fraction: f64,
    pub passes: bool,
    pub reasons: Vec<String>,
}

/// Samples at or beyond ±32767 count as clipped.
fn is_clipped(sample: i16) -> bool {
    sample.unsigned_abs() >= i16::MAX as u16
}

pub fn assess_quality(clip: &AudioClip, policy: &QualityPolicy) -> QualityReport {
    let duration_s = clip.duration_s();
    let clipped = clip.samples().iter().filter(|&&s| is_clipped(s)).count();
    let clipping_fraction = if clip.samples().is_empty() {
        0.0
    } else {
        clipped as f64 / clip.samples().len() as f64
    };

    let mut reasons = Vec::new();
    if duration_s < policy.min_s {
        reasons.push("too_short".to_string());
    }
    if duration_s > policy.max_s {
        reasons.push("too_long".to_string());
    }
    if clipping_fraction > policy.max_clipping_fraction {
        reasons.push("clipped".to_string());
    }
    QualityReport {
        duration_s,
        clipping_fraction,
        passes: reasons.is_empty(),
        reasons,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(samples: Vec<i16>, rate: u32) -> AudioClip {
        AudioClip::new(samples, rate).unwrap()
    }

    #[test]
    fn consultation_length_clip_passes() {
        // 332 s at the lowest supported rate keeps the test light.
        let c = clip(vec![100; 332 * 8_000], 8_000);
        let report = assess_quality(&c, &QualityPolicy::default());
        assert!(report.passes, "{report:?}");
        assert!(report.reasons.is_empty());
        assert_eq!(report.clipping_fraction, 0.0);
        assert!((report.duration_s - 332.0).abs() < 1e-9);
    }

    #[test]
    fn half_second_is_too_short() {
        let c = clip(vec![0; 8_000], 16_000);
        let report = assess_quality(&c, &QualityPolicy::default());
        assert!(!report.passes);
        assert_eq!(report.reasons, vec!["too_short"]);
    }

    #[test]
    fn too_long() {
        let policy = QualityPolicy {
            min_s: 0.1,
            max_s: 1.0,
            max_clipping_fraction: 0.5,
        };
        let report = assess_quality(&clip(vec![0; 16_001], 8_000), &policy);
        assert_eq!(report.reasons, vec!["too_long"]);
    }

    #[test]
    fn five_percent_full_scale_is_clipped() {
        let n = 20 * 8_000;
        let mut samples = vec![1234i16; n];
        // Every 20th sample at one of the three full-scale values.
        let full_scale = [i16::MAX, i16::MIN, -i16::MAX];
        for (k, i) in (0..n).step_by(20).enumerate() {
            samples[i] = full_scale[k % 3];
        }
        // Independent count by a plain scan.
        let mut expected = 0usize;
        for &s in &samples {
            if s == 32767 || s == -32767 || s == -32768 {
                expected += 1;
            }
        }
        assert_eq!(expected, n / 20);

        let report = assess_quality(&clip(samples, 8_000), &QualityPolicy::default());
        assert!((report.clipping_fraction - expected as f64 / n as f64).abs() < 1e-12);
        assert!((report.clipping_fraction - 0.05).abs() < 1e-12);
        assert_eq!(report.reasons, vec!["clipped"]);
        assert!(!report.passes);
    }

    #[test]
    fn passes_iff_no_reasons() {
        let policy = QualityPolicy::default();
        for samples in [vec![0; 100], vec![i16::MAX; 200_000], vec![5; 200_000]] {
            let r = assess_quality(&clip(samples, 8_000), &policy);
            assert_eq!(r.passes, r.reasons.is_empty());
        }
    }

    #[test]
    fn policy_validation() {
        assert!(QualityPolicy::default().validate().is_ok());
        let bad = QualityPolicy {
            min_s: 20.0,
            max_s: 10.0,
            max_clipping_fraction: 0.01,
        };
        assert!(bad.validate().is_err());
    }
}
