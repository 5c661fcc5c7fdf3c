//! Band-limited sample-rate conversion.
//!
//! Each output sample is a Kaiser-windowed sinc interpolation of the input.
//! The low-pass cutoff sits at 0.45 × min(input rate, output rate) and the
//! kernel spans 16 zero crossings on each side, measured at the lower of the
//! two rates. Rates with a small common period use a cached polyphase table;
//! both paths evaluate the same kernel function, so they agree bit for bit.

use std::f64::consts::PI;

use super::{AudioClip, MAX_SAMPLE_RATE_HZ, MIN_SAMPLE_RATE_HZ};

const HALF_WIDTH_ZERO_CROSSINGS: f64 = 16.0;
const CUTOFF_FRACTION: f64 = 0.45;
const KAISER_BETA: f64 = 8.6;
const MAX_CACHED_PHASES: u64 = 4096;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= (half / k) * (half / k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

struct Kernel {
    /// Cutoff in cycles per input sample.
    cutoff: f64,
    /// Support radius in input samples.
    radius: f64,
    /// Number of integer offsets on each side that can fall inside the radius.
    reach: i64,
    i0_beta: f64,
}

impl Kernel {
    fn new(in_hz: u32, out_hz: u32) -> Self {
        let lower = in_hz.min(out_hz) as f64;
        let radius = HALF_WIDTH_ZERO_CROSSINGS * in_hz as f64 / lower;
        Self {
            cutoff: CUTOFF_FRACTION * lower / in_hz as f64,
            radius,
            reach: radius.ceil() as i64,
            i0_beta: bessel_i0(KAISER_BETA),
        }
    }

    fn weight(&self, x: f64) -> f64 {
        let r = x / self.radius;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.i0_beta;
        2.0 * self.cutoff * sinc(2.0 * self.cutoff * x) * window
    }

    /// Weights for input offsets `-reach+1 ..= reach` relative to the sample
    /// left of the output position, whose fractional part is `frac`.
    fn taps(&self, frac: f64) -> Vec<f64> {
        (-self.reach + 1..=self.reach)
            .map(|d| self.weight(frac - d as f64))
            .collect()
    }
}

/// Resamples `clip` to `target_hz`. Equal rates return the samples unchanged.
///
/// The output length is `round(n × target / source)`, so the duration moves
/// by at most half an output sample.
///
/// # Panics
///
/// If `target_hz` is outside the supported 8 kHz–192 kHz range.
pub fn resample(clip: &AudioClip, target_hz: u32) -> AudioClip {
    assert!(
        (MIN_SAMPLE_RATE_HZ..=MAX_SAMPLE_RATE_HZ).contains(&target_hz),
        "target rate {target_hz} Hz outside supported range"
    );
    let in_hz = clip.sample_rate_hz();
    if in_hz == target_hz {
        return clip.clone();
    }

    let input = clip.samples();
    let n_in = input.len() as u64;
    let (in_u, out_u) = (in_hz as u64, target_hz as u64);
    let n_out = (n_in * out_u + in_u / 2) / in_u;

    let kernel = Kernel::new(in_hz, target_hz);
    let step = gcd(in_u, out_u);
    let phases = out_u / step;
    // Remainders are multiples of the gcd, so `rem / step` indexes the table.
    let mut cache: Vec<Option<Vec<f64>>> = if phases <= MAX_CACHED_PHASES {
        vec![None; phases as usize]
    } else {
        Vec::new()
    };

    let mut out = Vec::with_capacity(n_out as usize);
    for m in 0..n_out {
        // Output position m·in/out in input samples, as integer + remainder/out.
        let pos = m * in_u;
        let base = (pos / out_u) as i64;
        let rem = pos % out_u;
        let frac = rem as f64 / out_u as f64;

        let computed;
        let taps: &[f64] = if cache.is_empty() {
            computed = kernel.taps(frac);
            &computed
        } else {
            cache[(rem / step) as usize].get_or_insert_with(|| kernel.taps(frac))
        };

        let first = base - kernel.reach + 1;
        let last = first + taps.len() as i64;
        let acc: f64 = if first >= 0 && last as u64 <= n_in {
            taps.iter()
                .zip(&input[first as usize..last as usize])
                .map(|(w, &x)| w * x as f64)
                .sum()
        } else {
            taps.iter()
                .enumerate()
                .filter_map(|(i, w)| {
                    let k = first + i as i64;
                    (k >= 0 && (k as u64) < n_in).then(|| w * input[k as usize] as f64)
                })
                .sum()
        };
        out.push(acc.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16);
    }

    AudioClip::new(out, target_hz).expect("target rate validated above")
}
