//! The multitone sounding signal and the calibration response of the RF chain.
//!
//! The sounder transmits 801 equally spaced unit tones. Their phases are chosen
//! so the complex envelope is nearly constant: a quadratic-phase start followed
//! by alternating projections between the constant-envelope set (time domain)
//! and the unit-magnitude in-band set (frequency domain).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::CENTER_FREQUENCY_HZ;
use crate::C64;

pub const DEFAULT_TONES: usize = 801;
pub const DEFAULT_SPACING_HZ: f64 = 500e3;

/// PAPR target at which phase refinement stops.
pub const PAPR_TARGET_DB: f64 = 0.5;
/// Above this after the iteration budget, design fails.
pub const PAPR_LIMIT_DB: f64 = 1.0;
pub const MAX_ITERATIONS: usize = 1000;
/// Oversampling used for all PAPR measurements.
pub const PAPR_OVERSAMPLING: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct MultitoneSpec {
    pub tone_count: usize,
    pub tone_spacing_hz: f64,
    pub center_frequency_hz: f64,
    pub phases: Vec<f64>,
}

impl Default for MultitoneSpec {
    fn default() -> Self {
        Self::quadratic(DEFAULT_TONES, DEFAULT_SPACING_HZ)
    }
}

impl MultitoneSpec {
    /// Tone grid with quadratic phases `π k² / N`.
    pub fn quadratic(tone_count: usize, tone_spacing_hz: f64) -> Self {
        let n = tone_count as f64;
        Self {
            tone_count,
            tone_spacing_hz,
            center_frequency_hz: CENTER_FREQUENCY_HZ,
            phases: (0..tone_count)
                .map(|k| PI * (k as f64).powi(2) / n)
                .collect(),
        }
    }

    pub fn with_phases(mut self, phases: Vec<f64>) -> Self {
        self.phases = phases;
        self
    }

    /// One period of the multitone, `1 / spacing`.
    pub fn duration(&self) -> f64 {
        1.0 / self.tone_spacing_hz
    }

    pub fn bandwidth(&self) -> f64 {
        self.tone_count as f64 * self.tone_spacing_hz
    }

    /// Tone frequency offsets `k·Δf` from the lower band edge.
    pub fn tone_offsets(&self) -> Vec<f64> {
        (0..self.tone_count)
            .map(|k| k as f64 * self.tone_spacing_hz)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tone_count == 0 {
            return Err(invalid("multitone", "no tones"));
        }
        if self.phases.len() != self.tone_count {
            return Err(invalid(
                "multitone",
                format!("{} phases for {} tones", self.phases.len(), self.tone_count),
            ));
        }
        if !(self.tone_spacing_hz > 0.0) {
            return Err(invalid("multitone", "tone spacing must be positive"));
        }
        Ok(())
    }
}

/// One period of `Σ_k exp(j(2π k Δf t + φ_k))`, sampled `tone_count × oversampling` times.
pub fn time_domain(spec: &MultitoneSpec, oversampling: usize) -> Vec<C64> {
    let len = spec.tone_count * oversampling.max(1);
    let mut buf = vec![C64::new(0.0, 0.0); len];
    for (k, &phi) in spec.phases.iter().enumerate() {
        buf[k] = C64::from_polar(1.0, phi);
    }
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    buf
}

/// Peak-to-average power ratio, dB.
pub fn papr(samples: &[C64]) -> f64 {
    let (peak, sum) = samples.iter().fold((0f64, 0f64), |(p, s), x| {
        let e = x.norm_sqr();
        (p.max(e), s + e)
    });
    let mean = sum / samples.len() as f64;
    10.0 * (peak / mean).log10()
}

#[derive(Debug, Clone)]
pub struct PhaseDesign {
    pub phases: Vec<f64>,
    pub papr_db: f64,
    pub iterations: usize,
}

/// Clip level relative to rms used by the phase refinement (about 0.34 dB).
const CLIP_RATIO: f64 = 1.04;

/// Low-PAPR tone phases for the grid of `spec` (its own phases are ignored).
pub fn design_phases(spec: &MultitoneSpec) -> Result<PhaseDesign> {
    if spec.tone_count == 0 {
        return Err(invalid("multitone", "no tones"));
    }
    let n = spec.tone_count;
    let len = n * PAPR_OVERSAMPLING;
    let mut planner = FftPlanner::new();
    let inverse = planner.plan_fft_inverse(len);
    let forward = planner.plan_fft_forward(len);

    let mut phases = MultitoneSpec::quadratic(n, spec.tone_spacing_hz).phases;
    let mut buf = vec![C64::new(0.0, 0.0); len];
    let mut best = (f64::INFINITY, phases.clone());
    let mut iterations = 0;

    loop {
        buf.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for (k, &phi) in phases.iter().enumerate() {
            buf[k] = C64::from_polar(1.0, phi);
        }
        inverse.process(&mut buf);
        let current = papr(&buf);
        if current < best.0 {
            best = (current, phases.clone());
        }
        if current <= PAPR_TARGET_DB || iterations == MAX_ITERATIONS {
            break;
        }
        iterations += 1;

        // clip peaks just above rms, then restore unit in-band tones
        let rms = (buf.iter().map(|x| x.norm_sqr()).sum::<f64>() / len as f64).sqrt();
        let ceiling = CLIP_RATIO * rms;
        for x in buf.iter_mut() {
            let mag = x.norm();
            if mag > ceiling {
                *x *= ceiling / mag;
            }
        }
        forward.process(&mut buf);
        for (k, phi) in phases.iter_mut().enumerate() {
            if buf[k].norm_sqr() > 0.0 {
                *phi = buf[k].arg();
            }
        }
    }

    let (papr_db, phases) = best;
    if papr_db > PAPR_LIMIT_DB {
        return Err(Error::PaprNotReached {
            papr_db,
            iterations,
        });
    }
    Ok(PhaseDesign {
        phases,
        papr_db,
        iterations,
    })
}

/// Calibration model of the TX+RX chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationKind {
    Identity,
    Ripple,
}

/// Complex gain per tone; never zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResponse {
    pub gains: Vec<C64>,
}

impl CalibrationResponse {
    pub fn identity(tone_count: usize) -> Self {
        Self {
            gains: vec![C64::new(1.0, 0.0); tone_count],
        }
    }

    /// Mild amplitude (≤ ±0.5 dB) and phase (≤ ±0.3 rad) ripple, fixed by `seed`.
    pub fn ripple(tone_count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp_period = rng.gen_range(80.0..300.0);
        let amp_offset = rng.gen_range(0.0..2.0 * PI);
        let ph_period = rng.gen_range(120.0..500.0);
        let ph_offset = rng.gen_range(0.0..2.0 * PI);
        let slope = rng.gen_range(-0.25..0.25);
        let gains = (0..tone_count)
            .map(|k| {
                let k = k as f64;
                let amp_db = 0.5 * (2.0 * PI * k / amp_period + amp_offset).sin();
                let phase = 0.3 * (2.0 * PI * k / ph_period + ph_offset).sin()
                    + slope * k / tone_count as f64;
                C64::from_polar(10f64.powf(amp_db / 20.0), phase)
            })
            .collect();
        Self { gains }
    }

    pub fn validate(&self) -> Result<()> {
        match self.gains.iter().position(|g| g.norm_sqr() == 0.0) {
            Some(k) => Err(Error::ZeroCalibration(k)),
            None => Ok(()),
        }
    }
}

/// Calibration response used by both the synthesizer and the evaluator.
pub fn calibration_response(kind: CalibrationKind, tone_count: usize, seed: u64) -> CalibrationResponse {
    match kind {
        CalibrationKind::Identity => CalibrationResponse::identity(tone_count),
        CalibrationKind::Ripple => CalibrationResponse::ripple(tone_count, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_synthesis(phases: &[f64], samples: usize) -> Vec<C64> {
        // s(t_m) with t_m = m / (samples · Δf)
        (0..samples)
            .map(|m| {
                phases
                    .iter()
                    .enumerate()
                    .map(|(k, &phi)| {
                        C64::from_polar(1.0, 2.0 * PI * (k * m) as f64 / samples as f64 + phi)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn grid_constants() {
        let spec = MultitoneSpec::default();
        assert_eq!(spec.tone_count, 801);
        assert!((spec.duration() * spec.tone_spacing_hz - 1.0).abs() < 1e-15);
        assert!((spec.duration() - 2e-6).abs() < 1e-18);
        assert!((spec.bandwidth() - 400.5e6).abs() < 1e-3);
        // unambiguous range of one period
        assert!((spec.duration() * crate::units::SPEED_OF_LIGHT - 599.585).abs() < 1e-2);
    }

    #[test]
    fn single_tone_is_constant_envelope() {
        let spec = MultitoneSpec::quadratic(1, DEFAULT_SPACING_HZ);
        assert!(papr(&time_domain(&spec, 4)).abs() < 1e-12);
        let d = design_phases(&spec).unwrap();
        assert!(d.papr_db.abs() < 1e-12);
    }

    #[test]
    fn two_tone_beat() {
        let spec = MultitoneSpec::quadratic(2, DEFAULT_SPACING_HZ).with_phases(vec![0.0, 0.0]);
        let s = time_domain(&spec, 8);
        for (m, x) in s.iter().enumerate() {
            let phase = 2.0 * PI * m as f64 / s.len() as f64;
            assert!((x.norm_sqr() - (2.0 + 2.0 * phase.cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_synthesis() {
        let spec = MultitoneSpec::quadratic(13, DEFAULT_SPACING_HZ);
        let fft = time_domain(&spec, 4);
        let direct = direct_synthesis(&spec.phases, 52);
        for (a, b) in fft.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn parseval() {
        let spec = MultitoneSpec::default();
        let s = time_domain(&spec, 4);
        let energy: f64 = s.iter().map(|x| x.norm_sqr()).sum();
        let expected = (spec.tone_count * s.len()) as f64;
        assert!((energy / expected - 1.0).abs() < 1e-9);
    }

    #[test]
    fn papr_of_spike() {
        let mut x = vec![C64::new(0.0, 0.0); 64];
        x[5] = C64::new(1.0, 0.0);
        assert!((papr(&x) - 10.0 * 64f64.log10()).abs() < 1e-12);
        let flat = vec![C64::new(0.0, 1.0); 10];
        assert!(papr(&flat).abs() < 1e-12);
    }

    #[test]
    fn zero_phases_are_peaky() {
        let spec = MultitoneSpec::quadratic(801, DEFAULT_SPACING_HZ).with_phases(vec![0.0; 801]);
        // all tones add in phase at t = 0: peak N², mean N
        let p = papr(&direct_synthesis(&spec.phases, 801 * 4));
        assert!((p - 10.0 * 801f64.log10()).abs() < 1e-6);
        assert!((papr(&time_domain(&spec, 4)) - p).abs() < 1e-6);
        assert!(p > 10.0);
    }

    #[test]
    fn designed_waveform_meets_target() {
        let design = design_phases(&MultitoneSpec::default()).unwrap();
        assert!(design.papr_db <= PAPR_TARGET_DB, "{}", design.papr_db);
        let spec = MultitoneSpec::default().with_phases(design.phases.clone());
        assert!((papr(&time_domain(&spec, 4)) - design.papr_db).abs() < 1e-9);
        let again = design_phases(&MultitoneSpec::default()).unwrap();
        assert_eq!(design.phases, again.phases);
    }

    #[test]
    fn calibration_is_deterministic_and_nonzero() {
        let a = CalibrationResponse::ripple(801, 9);
        assert_eq!(a, CalibrationResponse::ripple(801, 9));
        assert_ne!(a, CalibrationResponse::ripple(801, 10));
        a.validate().unwrap();
        assert!(CalibrationResponse::identity(801)
            .gains
            .iter()
            .all(|g| *g == C64::new(1.0, 0.0)));
        let bad = CalibrationResponse {
            gains: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        };
        assert!(matches!(bad.validate(), Err(Error::ZeroCalibration(1))));
    }
}
