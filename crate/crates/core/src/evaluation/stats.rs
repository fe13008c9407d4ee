use serde::{Deserialize, Serialize};

use super::mpc::{Mpc, ThresholdRule};
use crate::units::lin_to_db;
use crate::C64;

/// RMS delay spread over the bins above `rule.level(noise, peak)`, with bin
/// `n` at delay `n · bin_width`. `None` when nothing clears the threshold.
pub fn rms_delay_spread(pdp: &[f64], bin_width: f64, noise: f64, rule: &ThresholdRule) -> Option<f64> {
    let peak = pdp.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return None;
    }
    let level = rule.level(noise, peak);
    let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
    for (n, &p) in pdp.iter().enumerate() {
        if p > level {
            let tau = n as f64 * bin_width;
            p0 += p;
            p1 += p * tau;
            p2 += p * tau * tau;
        }
    }
    if p0 == 0.0 {
        return None;
    }
    let mean = p1 / p0;
    Some((p2 / p0 - mean * mean).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleSide {
    Dod,
    Doa,
}

/// Power-weighted circular mean and spread, degrees.
pub fn circular_stats(samples: &[(f64, f64)]) -> Option<(f64, f64)> {
    let total: f64 = samples.iter().map(|s| s.1).sum();
    if samples.is_empty() || total <= 0.0 {
        return None;
    }
    let mu: C64 = samples
        .iter()
        .map(|(deg, p)| C64::from_polar(*p, deg.to_radians()))
        .sum::<C64>()
        / total;
    // Σ P |e^{jφ} - μ|² / ΣP = 1 - |μ|²
    let spread = (1.0 - mu.norm_sqr()).max(0.0).sqrt();
    Some((mu.arg().to_degrees(), spread.to_degrees()))
}

/// Mean angle and angular spread of one burst's MPCs on the chosen side.
pub fn angular_stats(mpcs: &[Mpc], side: AngleSide) -> Option<(f64, f64)> {
    let samples: Vec<(f64, f64)> = mpcs
        .iter()
        .map(|m| {
            let angle = match side {
                AngleSide::Dod => m.dod_az,
                AngleSide::Doa => m.doa_az,
            };
            (angle, m.power())
        })
        .collect();
    circular_stats(&samples)
}

/// `10 log10` of the above-threshold power of an (antenna de-embedded) omni
/// PDP, divided by the delay window's noise bandwidth so a single path reads
/// its own gain.
pub fn path_gain(omni: &[f64], noise: f64, rule: &ThresholdRule, enbw: f64) -> Option<f64> {
    let peak = omni.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return None;
    }
    let level = rule.level(noise, peak);
    let sum: f64 = omni.iter().filter(|p| **p > level).sum();
    (sum > 0.0).then(|| lin_to_db(sum / enbw))
}
