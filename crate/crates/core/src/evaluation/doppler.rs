use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::error::{invalid, Result};
use crate::C64;

/// Power vs Doppler frequency on an ascending grid starting at `-1/(2T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerSpectrum {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
}

impl DopplerSpectrum {
    pub fn peak_frequency(&self) -> f64 {
        self.frequencies[self.peak_index()]
    }

    /// Peak refined by a parabola through the neighbouring bins (taken
    /// circularly), wrapped back into `[-1/(2T), 1/(2T))`.
    pub fn refined_peak(&self) -> f64 {
        let n = self.power.len();
        let df = self.resolution();
        let i = self.peak_index();
        let (a, b, c) = (self.power[(i + n - 1) % n], self.power[i], self.power[(i + 1) % n]);
        let denom = a - 2.0 * b + c;
        let delta = if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
        let span = n as f64 * df;
        let lo = self.frequencies[0];
        (self.frequencies[i] + delta * df - lo).rem_euclid(span) + lo
    }

    fn peak_index(&self) -> usize {
        self.power
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, p)| if *p > best.1 { (i, *p) } else { best })
            .0
    }

    pub fn resolution(&self) -> f64 {
        self.frequencies[1] - self.frequencies[0]
    }
}

/// Hann-windowed DFT across snapshots of one complex delay-bin (or tone)
/// amplitude, zero-padded by `pad` (1 gives the native `1/(S·T)` grid).
///
/// The grid spans `[-1/(2T), 1/(2T))`; a tone above `1/(2T)` wraps to the
/// negative side.
pub fn doppler_spectrum(samples: &[C64], interval_s: f64, pad: usize) -> Result<DopplerSpectrum> {
    let s = samples.len();
    if s < 2 {
        return Err(invalid("doppler input", format!("{s} snapshots; need at least 2")));
    }
    if !(interval_s > 0.0) || pad == 0 {
        return Err(invalid("doppler input", "interval and padding must be positive"));
    }
    let n = s * pad;
    let mut buf = vec![C64::new(0.0, 0.0); n];
    let norm = 1.0 / s as f64;
    for (i, x) in samples.iter().enumerate() {
        // periodic Hann, so the window sums to S/2 regardless of S
        let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / s as f64).cos();
        buf[i] = x * w * norm;
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = 1.0 / (n as f64 * interval_s);
    let half = n / 2;
    let mut frequencies = Vec::with_capacity(n);
    let mut power = Vec::with_capacity(n);
    for j in 0..n {
        let k = (j + n - half) % n;
        frequencies.push((j as f64 - half as f64) * df);
        power.push(buf[k].norm_sqr());
    }
    Ok(DopplerSpectrum { frequencies, power })
}

/// Zero-padding used for peak estimation (the native grid stops one bin
/// short of `+1/(2T)`).
pub const ESTIMATOR_PADDING: usize = 16;

/// Doppler estimate from the refined peak of the finely padded spectrum.
pub fn estimate_doppler(samples: &[C64], interval_s: f64) -> Result<f64> {
    Ok(doppler_spectrum(samples, interval_s, ESTIMATOR_PADDING)?.refined_peak())
}
