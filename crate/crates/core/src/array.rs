//! Steerable beam patterns and the sounding beam grid.
//!
//! Each array end is modelled by a Gaussian mainlobe with a flat sidelobe floor:
//!
//! ```text
//! G(Δaz, Δel) = G0 · max( exp(-4 ln2 · [(Δaz/BWaz)² + (Δel/BWel)²]), floor )
//! ```
//!
//! which reproduces the 12° / 22° half-power widths of the 8×2 arrays and makes
//! sidelobe ghosts a fixed, known fraction of the true path power.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::units::{db_to_lin, wrap_deg};

/// Ordered azimuth/elevation steering angles of one array end, degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamGrid {
    pub azimuths: Vec<f64>,
    pub elevations: Vec<f64>,
}

impl Default for BeamGrid {
    /// Every other 5° beam over ±45°, elevation 0°: ten beams.
    fn default() -> Self {
        Self {
            azimuths: (0..10).map(|i| -45.0 + 10.0 * i as f64).collect(),
            elevations: vec![0.0],
        }
    }
}

impl BeamGrid {
    pub fn new(azimuths: Vec<f64>, elevations: Vec<f64>) -> Result<Self> {
        let grid = Self {
            azimuths,
            elevations,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.azimuths.is_empty() || self.elevations.is_empty() {
            return Err(invalid("beam grid", "no steering angles"));
        }
        if let Some(a) = self.azimuths.iter().find(|a| !(-45.0..=45.0).contains(*a)) {
            return Err(invalid("beam grid", format!("azimuth {a} outside [-45, 45]")));
        }
        Ok(())
    }

    /// Number of beams (azimuth × elevation).
    pub fn len(&self) -> usize {
        self.azimuths.len() * self.elevations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Steering direction of beam `i`, elevation-major within each azimuth.
    pub fn beam(&self, i: usize) -> (f64, f64) {
        let ne = self.elevations.len();
        (self.azimuths[i / ne], self.elevations[i % ne])
    }

    pub fn beams(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(|i| self.beam(i))
    }

    /// Beam index whose steering azimuth is closest to `az` (elevation 0 row).
    pub fn nearest(&self, az: f64) -> usize {
        let ne = self.elevations.len();
        let mut best = 0;
        for (i, a) in self.azimuths.iter().enumerate() {
            if (a - az).abs() < (self.azimuths[best] - az).abs() {
                best = i;
            }
        }
        best * ne
    }
}

/// Shape parameters shared by every beam of one array end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternShape {
    /// Horizontal half-power beamwidth, degrees.
    pub beamwidth_az: f64,
    /// Vertical half-power beamwidth, degrees.
    pub beamwidth_el: f64,
    /// Boresight power gain, dBi.
    pub gain_dbi: f64,
    /// Sidelobe floor relative to boresight, dB (negative).
    pub sidelobe_db: f64,
}

impl Default for PatternShape {
    fn default() -> Self {
        Self {
            beamwidth_az: 12.0,
            beamwidth_el: 22.0,
            gain_dbi: 19.5,
            sidelobe_db: -20.0,
        }
    }
}

impl PatternShape {
    pub fn validate(&self) -> Result<()> {
        if !(self.beamwidth_az > 0.0 && self.beamwidth_el > 0.0) {
            return Err(invalid("beam pattern", "beamwidths must be positive"));
        }
        if !(self.sidelobe_db < -3.0) {
            return Err(invalid("beam pattern", "sidelobe floor must be below -3 dB"));
        }
        Ok(())
    }

    pub fn steer(&self, az: f64, el: f64) -> BeamPattern {
        BeamPattern { az, el, shape: *self }
    }

    /// Boresight power gain, linear.
    pub fn boresight_power(&self) -> f64 {
        db_to_lin(self.gain_dbi)
    }
}

/// One steered beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamPattern {
    pub az: f64,
    pub el: f64,
    pub shape: PatternShape,
}

impl BeamPattern {
    /// Power gain relative to boresight (linear, in `[floor, 1]`).
    pub fn relative_power(&self, az: f64, el: f64) -> f64 {
        let daz = wrap_deg(az - self.az) / self.shape.beamwidth_az;
        let del = wrap_deg(el - self.el) / self.shape.beamwidth_el;
        let main = (-4.0 * std::f64::consts::LN_2 * (daz * daz + del * del)).exp();
        main.max(db_to_lin(self.shape.sidelobe_db))
    }

    /// Absolute power gain, linear.
    pub fn power_gain(&self, az: f64, el: f64) -> f64 {
        self.shape.boresight_power() * self.relative_power(az, el)
    }
}

/// Amplitude gain (square root of the power gain) towards `(az, el)`.
pub fn beam_gain(pattern: &BeamPattern, az: f64, el: f64) -> f64 {
    pattern.power_gain(az, el).sqrt()
}

/// A TX/RX beam index pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeamPair {
    pub tx: usize,
    pub rx: usize,
}

/// All beam pairs in sweep order: every RX beam for TX beam 0, then TX beam 1, ...
pub fn enumerate_beam_pairs(tx: &BeamGrid, rx: &BeamGrid) -> Vec<BeamPair> {
    (0..tx.len())
        .flat_map(|t| (0..rx.len()).map(move |r| BeamPair { tx: t, rx: r }))
        .collect()
}

/// Sweep position of a pair under [`enumerate_beam_pairs`] ordering.
pub fn pair_index(pair: BeamPair, rx_count: usize) -> usize {
    pair.tx * rx_count + pair.rx
}

pub fn pair_at(index: usize, rx_count: usize) -> BeamPair {
    BeamPair {
        tx: index / rx_count,
        rx: index % rx_count,
    }
}

/// Both array ends of the sounder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ArraySetup {
    pub tx_grid: BeamGrid,
    pub rx_grid: BeamGrid,
    pub tx_shape: PatternShape,
    pub rx_shape: PatternShape,
}

impl ArraySetup {
    pub fn validate(&self) -> Result<()> {
        self.tx_grid.validate()?;
        self.rx_grid.validate()?;
        self.tx_shape.validate()?;
        self.rx_shape.validate()
    }

    pub fn pair_count(&self) -> usize {
        self.tx_grid.len() * self.rx_grid.len()
    }

    pub fn tx_beam(&self, i: usize) -> BeamPattern {
        let (az, el) = self.tx_grid.beam(i);
        self.tx_shape.steer(az, el)
    }

    pub fn rx_beam(&self, i: usize) -> BeamPattern {
        let (az, el) = self.rx_grid.beam(i);
        self.rx_shape.steer(az, el)
    }

    /// Product of the boresight power gains, used to de-embed antennas.
    pub fn boresight_product(&self) -> f64 {
        self.tx_shape.boresight_power() * self.rx_shape.boresight_power()
    }

    /// Grid of the given size: the default when it matches, otherwise centred 10° steps.
    pub fn for_dims(tx_beams: usize, rx_beams: usize) -> Self {
        let grid = |n: usize| {
            if n == 10 {
                BeamGrid::default()
            } else {
                let start = -5.0 * (n as f64 - 1.0);
                BeamGrid {
                    azimuths: (0..n).map(|i| start + 10.0 * i as f64).collect(),
                    elevations: vec![0.0],
                }
            }
        };
        Self {
            tx_grid: grid(tx_beams),
            rx_grid: grid(rx_beams),
            ..Self::default()
        }
    }
}
