use serde::{Deserialize, Serialize};

use super::mpc::ThresholdRule;
use super::pdp::PdpTensor;
use crate::array::ArraySetup;
use crate::units::lin_to_db;

/// Per-pair gain of one burst, dB, antenna-de-embedded: the above-threshold
/// power of each directional PDP divided by the window noise bandwidth. A pair
/// with nothing above threshold falls back to its total power so the series
/// stays defined.
pub fn pair_gains(pdp: &PdpTensor, noise: f64, rule: &ThresholdRule, enbw: f64, arrays: &ArraySetup) -> Vec<f64> {
    let level = rule.level(noise, pdp.max());
    let scale = 1.0 / (enbw * arrays.boresight_product());
    (0..pdp.pairs())
        .map(|p| {
            let bins = pdp.pair(p);
            let above: f64 = bins.iter().filter(|x| **x > level).sum();
            let sum = if above > 0.0 { above } else { bins.iter().sum() };
            lin_to_db((sum * scale).max(f64::MIN_POSITIVE))
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, x)| if *x > best.1 { (i, *x) } else { best })
        .0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamPairAnalysis {
    pub best_pair: Vec<usize>,
    pub best_gain_db: Vec<f64>,
    /// Pair with the highest idle-period median gain.
    pub fixed_pair: usize,
    pub fixed_gain_db: Vec<f64>,
    pub fixed_excess_db: Vec<f64>,
    pub adaptive_excess_db: Vec<f64>,
}

/// Excess-loss series for a fixed beam pair and for per-burst best-pair
/// selection, referenced to the idle bursts.
pub fn beam_pair_analysis(gains: &[Vec<f64>], idle: &[usize]) -> BeamPairAnalysis {
    let pairs = gains.first().map_or(0, Vec::len);
    let idle: Vec<usize> = if idle.is_empty() { vec![0] } else { idle.to_vec() };
    let best_pair: Vec<usize> = gains.iter().map(|g| argmax(g)).collect();
    let best_gain_db: Vec<f64> = gains.iter().zip(&best_pair).map(|(g, p)| g[*p]).collect();
    let idle_medians: Vec<f64> = (0..pairs)
        .map(|p| median(idle.iter().map(|b| gains[*b][p]).collect()))
        .collect();
    let fixed_pair = argmax(&idle_medians);
    let fixed_ref = idle_medians.get(fixed_pair).copied().unwrap_or(0.0);
    let best_ref = median(idle.iter().map(|b| best_gain_db[*b]).collect());
    let fixed_gain_db: Vec<f64> = gains.iter().map(|g| g[fixed_pair]).collect();
    BeamPairAnalysis {
        fixed_excess_db: fixed_gain_db.iter().map(|g| fixed_ref - g).collect(),
        adaptive_excess_db: best_gain_db.iter().map(|g| best_ref - g).collect(),
        best_pair,
        best_gain_db,
        fixed_pair,
        fixed_gain_db,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchOutcome {
    pub chosen: Vec<usize>,
    pub switches: usize,
    /// Per-burst shortfall against the best pair, dB.
    pub loss_db: Vec<f64>,
    pub total_loss_db: f64,
}

/// Hysteresis/dwell beam tracking: start on the best pair, move to the current
/// best only when it beats the held pair by at least `hysteresis_db` and the
/// held pair has been kept for at least `dwell` bursts.
pub fn beam_switch_strategy(gains: &[Vec<f64>], hysteresis_db: f64, dwell: usize) -> SwitchOutcome {
    let mut chosen = Vec::with_capacity(gains.len());
    let mut loss_db = Vec::with_capacity(gains.len());
    let mut switches = 0;
    let mut current = gains.first().map_or(0, |g| argmax(g));
    let mut held = 0usize;
    for g in gains {
        let best = argmax(g);
        if best != current && held >= dwell.max(1) && g[best] - g[current] >= hysteresis_db {
            current = best;
            switches += 1;
            held = 0;
        }
        held += 1;
        chosen.push(current);
        loss_db.push(g[best] - g[current]);
    }
    SwitchOutcome {
        total_loss_db: loss_db.iter().sum(),
        chosen,
        switches,
        loss_db,
    }
}
