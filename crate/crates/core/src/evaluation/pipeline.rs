use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::beams::{beam_pair_analysis, beam_switch_strategy, pair_gains, BeamPairAnalysis, SwitchOutcome};
use super::doppler::{doppler_spectrum, estimate_doppler};
use super::mpc::{ghost_filter, peak_search_3d, tail_noise, tensor_noise, Mpc, ThresholdRule, Track, TrackGates, Tracker};
use super::pdp::{bin_width, omni_pdp, DelayWindow, PdpTensor, PdpTransform};
use super::stats::{angular_stats, path_gain, rms_delay_spread, AngleSide};
use crate::array::ArraySetup;
use crate::error::{invalid, Result};
use crate::sounder::{BurstData, MeasurementTensor};
use crate::units::lin_to_db;
use crate::waveform::CalibrationResponse;
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub window: DelayWindow,
    pub detection: ThresholdRule,
    pub delay_spread: ThresholdRule,
    /// Share of highest-delay bins used for the noise estimate.
    pub noise_fraction: f64,
    pub ghost_margin_db: f64,
    pub gates: TrackGates,
    /// Leading bursts treated as the idle reference.
    pub idle_bursts: usize,
    pub hysteresis_db: f64,
    pub dwell_bursts: usize,
    /// Sub-bin steps per bin used to refine MPC power.
    pub refine_steps: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            window: DelayWindow::Blackman,
            detection: ThresholdRule::DETECTION,
            delay_spread: ThresholdRule::DELAY_SPREAD,
            noise_fraction: 0.1,
            ghost_margin_db: 3.0,
            gates: TrackGates::default(),
            idle_bursts: 10,
            hysteresis_db: 3.0,
            dwell_bursts: 1,
            refine_steps: 16,
        }
    }
}

impl EvalConfig {
    /// Overrides the noise margin of both threshold rules.
    pub fn with_detection_margin(mut self, margin_db: f64) -> Self {
        self.detection.margin_db = margin_db;
        self.delay_spread.margin_db = margin_db;
        self
    }
}

/// Everything extracted from one burst.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstSummary {
    pub index: usize,
    /// Burst start, seconds.
    pub time: f64,
    /// Mean per-bin noise power of the directional PDPs.
    pub noise: f64,
    pub mpcs: Vec<Mpc>,
    pub path_gain_db: Option<f64>,
    pub rms_delay_spread: Option<f64>,
    pub dod: Option<(f64, f64)>,
    pub doa: Option<(f64, f64)>,
    pub pair_gains_db: Vec<f64>,
    /// De-embedded omnidirectional PDP, linear.
    pub omni: Vec<f64>,
    /// Max over significant (pair, bin) cells of the native-grid Doppler spectra.
    pub doppler: Vec<f64>,
}

impl BurstSummary {
    pub fn best_pair(&self) -> (usize, f64) {
        self.pair_gains_db
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, g)| if *g > b.1 { (i, *g) } else { b })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub tracks: Vec<Track>,
    pub beams: BeamPairAnalysis,
    pub switching: SwitchOutcome,
    pub idle_bursts: Vec<usize>,
}

/// Streaming evaluator: feed bursts in order, then [`Evaluator::finish`].
#[derive(Debug)]
pub struct Evaluator {
    arrays: ArraySetup,
    transform: PdpTransform,
    config: EvalConfig,
    bin_width: f64,
    tracker: Tracker,
    pair_gains: Vec<Vec<f64>>,
}

struct PairProfiles {
    mean_power: Vec<f64>,
    /// `[snapshot][bin]`.
    profiles: Vec<Vec<C64>>,
}

impl Evaluator {
    pub fn new(arrays: ArraySetup, cal: &CalibrationResponse, tone_spacing_hz: f64, config: EvalConfig) -> Result<Self> {
        arrays.validate()?;
        let transform = PdpTransform::new(cal, config.window)?;
        Ok(Self {
            bin_width: bin_width(cal.gains.len(), tone_spacing_hz),
            tracker: Tracker::new(config.gates),
            arrays,
            transform,
            config,
            pair_gains: Vec::new(),
        })
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn enbw(&self) -> f64 {
        self.transform.enbw()
    }

    fn refine_power(&self, burst: &BurstData, pair: usize, bin: usize) -> f64 {
        let steps = self.config.refine_steps.max(1);
        let half = steps as isize / 2;
        (-half..=half)
            .map(|i| {
                let pos = bin as f64 + i as f64 / steps as f64;
                (0..burst.snapshots)
                    .map(|s| self.transform.power_at(burst.response(s, pair), pos))
                    .sum::<f64>()
                    / burst.snapshots as f64
            })
            .fold(0.0, f64::max)
    }

    pub fn process(&mut self, burst: &BurstData) -> Result<BurstSummary> {
        if burst.pairs != self.arrays.pair_count() || burst.tones != self.transform.tones() {
            return Err(invalid(
                "burst",
                format!(
                    "{} pairs x {} tones does not match the configured {} x {}",
                    burst.pairs,
                    burst.tones,
                    self.arrays.pair_count(),
                    self.transform.tones()
                ),
            ));
        }
        let bins = burst.tones;
        let interval = if burst.snapshots > 1 {
            burst.timestamps[burst.pairs] - burst.timestamps[0]
        } else {
            0.0
        };

        let per_pair: Vec<PairProfiles> = (0..burst.pairs)
            .into_par_iter()
            .map(|p| {
                let profiles: Vec<Vec<C64>> = (0..burst.snapshots)
                    .map(|s| self.transform.delay_profile_f32(burst.response(s, p)))
                    .collect();
                let mut mean_power = vec![0.0; bins];
                for prof in &profiles {
                    for (m, x) in mean_power.iter_mut().zip(prof) {
                        *m += x.norm_sqr();
                    }
                }
                mean_power.iter_mut().for_each(|m| *m /= burst.snapshots as f64);
                PairProfiles { mean_power, profiles }
            })
            .collect();

        let mut pdp = PdpTensor::zeros(self.arrays.tx_grid.len(), self.arrays.rx_grid.len(), bins);
        for (p, pp) in per_pair.iter().enumerate() {
            pdp.pair_mut(p).copy_from_slice(&pp.mean_power);
        }
        let cfg = &self.config;
        let noise = tensor_noise(&pdp, cfg.noise_fraction);
        let omni = omni_pdp(&pdp, &self.arrays);
        let omni_noise = tail_noise(&omni, cfg.noise_fraction);
        let de_embed = 1.0 / self.arrays.boresight_product();

        let mut mpcs = peak_search_3d(&pdp, noise, &cfg.detection, &self.arrays, self.bin_width, burst.index);
        let refined: Vec<f64> = mpcs
            .par_iter()
            .map(|m| self.refine_power(burst, m.tx * self.arrays.rx_grid.len() + m.rx, m.bin))
            .collect();
        for (m, p) in mpcs.iter_mut().zip(refined) {
            m.power_db = lin_to_db(p * de_embed);
        }
        let sidelobe = self.arrays.tx_shape.sidelobe_db.max(self.arrays.rx_shape.sidelobe_db);
        let mut mpcs = ghost_filter(&mpcs, sidelobe, cfg.ghost_margin_db);

        let level = cfg.detection.level(noise, pdp.max());
        let mut doppler = Vec::new();
        if burst.snapshots > 1 {
            let n_rx = self.arrays.rx_grid.len();
            for m in mpcs.iter_mut() {
                let samples: Vec<C64> = per_pair[m.tx * n_rx + m.rx].profiles.iter().map(|p| p[m.bin]).collect();
                m.doppler_hz = Some(estimate_doppler(&samples, interval)?);
            }
            let spectra: Vec<Vec<f64>> = per_pair
                .par_iter()
                .map(|pp| {
                    let mut agg = vec![0.0f64; burst.snapshots];
                    for (n, mean) in pp.mean_power.iter().enumerate() {
                        if *mean <= level {
                            continue;
                        }
                        let samples: Vec<C64> = pp.profiles.iter().map(|p| p[n]).collect();
                        if let Ok(sp) = doppler_spectrum(&samples, interval, 1) {
                            for (a, x) in agg.iter_mut().zip(&sp.power) {
                                *a = a.max(x * de_embed);
                            }
                        }
                    }
                    agg
                })
                .collect();
            doppler = vec![0.0f64; burst.snapshots];
            for s in spectra {
                for (a, x) in doppler.iter_mut().zip(s) {
                    *a = a.max(x);
                }
            }
        }

        self.tracker.step(burst.index, &mut mpcs);
        let pair_gains_db = pair_gains(&pdp, noise, &cfg.detection, self.transform.enbw(), &self.arrays);
        self.pair_gains.push(pair_gains_db.clone());

        Ok(BurstSummary {
            index: burst.index,
            time: burst.timestamps[0],
            noise,
            path_gain_db: path_gain(&omni, omni_noise, &cfg.detection, self.transform.enbw()),
            rms_delay_spread: rms_delay_spread(&omni, self.bin_width, omni_noise, &cfg.delay_spread),
            dod: angular_stats(&mpcs, AngleSide::Dod),
            doa: angular_stats(&mpcs, AngleSide::Doa),
            mpcs,
            pair_gains_db,
            omni,
            doppler,
        })
    }

    pub fn finish(self) -> CampaignReport {
        let idle: Vec<usize> = (0..self.config.idle_bursts.min(self.pair_gains.len())).collect();
        CampaignReport {
            beams: beam_pair_analysis(&self.pair_gains, &idle),
            switching: beam_switch_strategy(&self.pair_gains, self.config.hysteresis_db, self.config.dwell_bursts),
            tracks: self.tracker.finish(),
            idle_bursts: idle,
        }
    }
}

/// Evaluates an in-memory tensor end to end.
pub fn evaluate_tensor(
    tensor: &MeasurementTensor,
    arrays: &ArraySetup,
    cal: &CalibrationResponse,
    config: &EvalConfig,
) -> Result<(Vec<BurstSummary>, CampaignReport)> {
    let mut ev = Evaluator::new(arrays.clone(), cal, tensor.tone_spacing_hz, config.clone())?;
    let summaries = (0..tensor.dims[0])
        .map(|b| ev.process(&tensor.burst(b)))
        .collect::<Result<Vec<_>>>()?;
    Ok((summaries, ev.finish()))
}
