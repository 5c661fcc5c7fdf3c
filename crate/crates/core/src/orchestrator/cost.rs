//! Per-consultation API cost accounting.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceConfig {
    #[serde(default = "default_currency")]
    pub currency: String,
    pub audio_rate_per_min: f64,
    pub input_rate_per_1k: f64,
    pub output_rate_per_1k: f64,
}

fn default_currency() -> String {
    "USD".into()
}

impl Default for PriceConfig {
    fn default() -> Self {
        Self {
            currency: default_currency(),
            audio_rate_per_min: 0.006,
            input_rate_per_1k: 0.0015,
            output_rate_per_1k: 0.002,
        }
    }
}

impl PriceConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, rate) in [
            ("audio_rate_per_min", self.audio_rate_per_min),
            ("input_rate_per_1k", self.input_rate_per_1k),
            ("output_rate_per_1k", self.output_rate_per_1k),
        ] {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(format!("{name} must be a non-negative number, got {rate}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub audio_minutes: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub audio_rate_per_min: f64,
    pub input_rate_per_1k: f64,
    pub output_rate_per_1k: f64,
    pub currency: String,
    pub total_usd: f64,
    /// Token counts were estimated from character counts rather than
    /// reported by the backend.
    #[serde(default)]
    pub tokens_estimated: bool,
}

fn round_micro(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// `audio_minutes × audio_rate + input_tokens/1000 × input_rate +
/// output_tokens/1000 × output_rate`, rounded to six decimal places.
pub fn estimate_cost(
    audio_duration_s: f64,
    input_tokens: u64,
    output_tokens: u64,
    prices: &PriceConfig,
) -> CostEstimate {
    let audio_minutes = audio_duration_s / 60.0;
    let total = audio_minutes * prices.audio_rate_per_min
        + input_tokens as f64 / 1000.0 * prices.input_rate_per_1k
        + output_tokens as f64 / 1000.0 * prices.output_rate_per_1k;
    CostEstimate {
        audio_minutes,
        input_tokens,
        output_tokens,
        audio_rate_per_min: prices.audio_rate_per_min,
        input_rate_per_1k: prices.input_rate_per_1k,
        output_rate_per_1k: prices.output_rate_per_1k,
        currency: prices.currency.clone(),
        total_usd: round_micro(total),
        tokens_estimated: false,
    }
}

/// Scale-up of a per-consultation cost band to a national caseload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NationalProjection {
    pub facilities: u64,
    pub consultations_per_year: u64,
}

impl Default for NationalProjection {
    /// Roughly 10,000 Puskesmas handling 100 million consultations a year.
    fn default() -> Self {
        Self {
            facilities: 10_000,
            consultations_per_year: 100_000_000,
        }
    }
}

impl NationalProjection {
    pub fn annual_cost_usd(&self, per_consultation_usd: f64) -> f64 {
        self.consultations_per_year as f64 * per_consultation_usd
    }

    pub fn annual_band_usd(&self, low: f64, high: f64) -> (f64, f64) {
        (self.annual_cost_usd(low), self.annual_cost_usd(high))
    }

    pub fn consultations_per_facility(&self) -> f64 {
        self.consultations_per_year as f64 / self.facilities as f64
    }
}
