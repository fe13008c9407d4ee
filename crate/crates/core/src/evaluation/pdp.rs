use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex32;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::array::ArraySetup;
use crate::error::{Error, Result};
use crate::waveform::CalibrationResponse;
use crate::C64;

/// Taper applied across tones before the delay transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DelayWindow {
    /// Plain IDFT: narrowest peak, -13 dB sidelobes.
    Rectangular,
    Hann,
    /// Sidelobes near -58 dB; the default for MPC extraction.
    #[default]
    Blackman,
}

impl DelayWindow {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        let m = (n - 1) as f64;
        (0..n)
            .map(|k| {
                let x = 2.0 * PI * k as f64 / m;
                match self {
                    DelayWindow::Rectangular => 1.0,
                    DelayWindow::Hann => 0.5 - 0.5 * x.cos(),
                    DelayWindow::Blackman => 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos(),
                }
            })
            .collect()
    }

    /// Equivalent noise bandwidth in delay bins: the summed PDP of a single
    /// path equals its power times this factor.
    pub fn enbw(self, n: usize) -> f64 {
        let w = self.coefficients(n);
        let s1: f64 = w.iter().sum();
        let s2: f64 = w.iter().map(|x| x * x).sum();
        n as f64 * s2 / (s1 * s1)
    }
}

/// Delay resolution of an `n`-tone grid: `1 / (n Δf)`.
pub fn bin_width(tone_count: usize, tone_spacing_hz: f64) -> f64 {
    1.0 / (tone_count as f64 * tone_spacing_hz)
}

/// Calibrated, windowed tone-to-delay transform.
///
/// `X_n = Σ_k w_k (H_k / cal_k) e^{j2πkn/N} / Σ_k w_k`. With the rectangular
/// window this is the `(1/N) Σ` IDFT, so `H = cal` maps to a unit impulse at
/// bin 0, and in general a path of complex amplitude `a` on a bin centre has
/// peak power `|a|²`.
#[derive(Clone)]
pub struct PdpTransform {
    coef: Vec<C64>,
    fft: Arc<dyn Fft<f64>>,
    window: DelayWindow,
}

impl std::fmt::Debug for PdpTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PdpTransform")
            .field("tones", &self.coef.len())
            .field("window", &self.window)
            .finish()
    }
}

impl PdpTransform {
    pub fn new(cal: &CalibrationResponse, window: DelayWindow) -> Result<Self> {
        if let Some(k) = cal.gains.iter().position(|g| g.norm_sqr() == 0.0 || !g.is_finite()) {
            return Err(Error::ZeroCalibration(k));
        }
        let n = cal.gains.len();
        let w = window.coefficients(n);
        let sum: f64 = w.iter().sum();
        let coef = w.iter().zip(&cal.gains).map(|(w, c)| w / sum / c).collect();
        Ok(Self {
            coef,
            fft: FftPlanner::new().plan_fft_inverse(n),
            window,
        })
    }

    pub fn tones(&self) -> usize {
        self.coef.len()
    }

    pub fn window(&self) -> DelayWindow {
        self.window
    }

    pub fn enbw(&self) -> f64 {
        self.window.enbw(self.tones())
    }

    pub fn delay_profile(&self, h: &[C64]) -> Vec<C64> {
        let mut buf: Vec<C64> = h.iter().zip(&self.coef).map(|(x, c)| x * c).collect();
        self.fft.process(&mut buf);
        buf
    }

    pub fn delay_profile_f32(&self, h: &[Complex32]) -> Vec<C64> {
        let mut buf: Vec<C64> = h
            .iter()
            .zip(&self.coef)
            .map(|(x, c)| C64::new(x.re as f64, x.im as f64) * c)
            .collect();
        self.fft.process(&mut buf);
        buf
    }

    pub fn pdp(&self, h: &[C64]) -> Vec<f64> {
        self.delay_profile(h).iter().map(|x| x.norm_sqr()).collect()
    }

    /// Power of the transform evaluated off the bin grid, at fractional bin
    /// `position`.
    pub fn power_at(&self, h: &[Complex32], position: f64) -> f64 {
        let n = self.tones() as f64;
        let step = C64::from_polar(1.0, 2.0 * PI * position / n);
        let mut rot = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for (k, (x, c)) in h.iter().zip(&self.coef).enumerate() {
            if k % 64 == 0 {
                rot = C64::from_polar(1.0, 2.0 * PI * position * k as f64 / n);
            }
            acc += C64::new(x.re as f64, x.im as f64) * c * rot;
            rot *= step;
        }
        acc.norm_sqr()
    }
}

/// `P(τ_n) = |IDFT_n{H_k / cal_k}|²` for one beam pair.
pub fn directional_pdp(h: &[C64], cal: &CalibrationResponse, window: DelayWindow) -> Result<Vec<f64>> {
    if h.len() != cal.gains.len() {
        return Err(crate::error::invalid(
            "pdp input",
            format!("{} tones but calibration has {}", h.len(), cal.gains.len()),
        ));
    }
    Ok(PdpTransform::new(cal, window)?.pdp(h))
}

/// Directional PDPs of one sweep or burst, `[tx][rx][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdpTensor {
    pub n_tx: usize,
    pub n_rx: usize,
    pub bins: usize,
    pub power: Vec<f64>,
}

impl PdpTensor {
    pub fn zeros(n_tx: usize, n_rx: usize, bins: usize) -> Self {
        Self {
            n_tx,
            n_rx,
            bins,
            power: vec![0.0; n_tx * n_rx * bins],
        }
    }

    pub fn pairs(&self) -> usize {
        self.n_tx * self.n_rx
    }

    pub fn get(&self, tx: usize, rx: usize, bin: usize) -> f64 {
        self.power[(tx * self.n_rx + rx) * self.bins + bin]
    }

    pub fn pair(&self, p: usize) -> &[f64] {
        &self.power[p * self.bins..(p + 1) * self.bins]
    }

    pub fn pair_mut(&mut self, p: usize) -> &mut [f64] {
        &mut self.power[p * self.bins..(p + 1) * self.bins]
    }

    pub fn max(&self) -> f64 {
        self.power.iter().copied().fold(0.0, f64::max)
    }
}

/// Per delay bin, the strongest pair after removing both boresight gains.
pub fn omni_pdp(tensor: &PdpTensor, arrays: &ArraySetup) -> Vec<f64> {
    let scale = 1.0 / arrays.boresight_product();
    let mut out = vec![0.0f64; tensor.bins];
    for p in 0..tensor.pairs() {
        for (o, x) in out.iter_mut().zip(tensor.pair(p)) {
            *o = o.max(x * scale);
        }
    }
    out
}
