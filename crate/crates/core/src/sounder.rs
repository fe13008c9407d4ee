//! Campaign schedule and per-slot channel synthesis.
//!
//! Slot timing follows the switched-beam sweep: every beam pair is measured in a
//! 4 µs slot (2 µs multitone + 2 µs switching guard), one sweep of all pairs is a
//! MIMO snapshot, 20 back-to-back snapshots form a burst and bursts repeat every
//! 60 ms. For burst `b`, snapshot `s`, pair `p`:
//!
//! ```text
//! t = b · 60 ms + s · 400 µs + p · 4 µs
//! ```
//!
//! Scene geometry is sampled once per snapshot; each path's Doppler phase is
//! advanced to the exact slot time. Tones are at `f_k = k · Δf` from the lower
//! band edge. Noise is drawn from a counter-based stream keyed by
//! `(seed, burst, snapshot, pair)` so the output does not depend on scheduling.

use std::f64::consts::PI;

use num_complex::Complex32;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{ArraySetup, BeamPattern};
use crate::error::{invalid, Error, Result};
use crate::scene::{enumerate_paths, PathTruth, Scene};
use crate::units::{db_to_lin, CENTER_FREQUENCY_HZ};
use crate::waveform::{calibration_response, CalibrationKind, CalibrationResponse, DEFAULT_SPACING_HZ, DEFAULT_TONES};
use crate::C64;

/// Default ripple seed shared by simulate and evaluate.
pub const DEFAULT_CALIBRATION_SEED: u64 = 0x05EE_DCA1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SounderConfig {
    pub tone_count: usize,
    pub tone_spacing_hz: f64,
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub waveform_s: f64,
    pub guard_s: f64,
    pub snapshots_per_burst: usize,
    pub burst_period_s: f64,
    pub bursts: usize,
    pub eirp_dbm: f64,
    pub noise_figure_db: f64,
    pub arrays: ArraySetup,
    pub calibration: CalibrationKind,
    pub calibration_seed: u64,
    pub noiseless: bool,
    pub seed: u64,
}

impl Default for SounderConfig {
    fn default() -> Self {
        Self {
            tone_count: DEFAULT_TONES,
            tone_spacing_hz: DEFAULT_SPACING_HZ,
            center_frequency_hz: CENTER_FREQUENCY_HZ,
            bandwidth_hz: 400e6,
            waveform_s: 2e-6,
            guard_s: 2e-6,
            snapshots_per_burst: 20,
            burst_period_s: 60e-3,
            bursts: 200,
            eirp_dbm: 36.0,
            noise_figure_db: 5.0,
            arrays: ArraySetup::default(),
            calibration: CalibrationKind::Ripple,
            calibration_seed: DEFAULT_CALIBRATION_SEED,
            noiseless: false,
            seed: 0,
        }
    }
}

fn picoseconds(s: f64) -> u64 {
    (s * 1e12).round() as u64
}

impl SounderConfig {
    pub fn validate(&self) -> Result<()> {
        self.arrays.validate()?;
        if self.tone_count == 0 || self.snapshots_per_burst == 0 || self.bursts == 0 {
            return Err(invalid("sounder config", "tone, snapshot and burst counts must be positive"));
        }
        if !(self.tone_spacing_hz > 0.0 && self.bandwidth_hz > 0.0) {
            return Err(invalid("sounder config", "spacing and bandwidth must be positive"));
        }
        if !(self.waveform_s > 0.0 && self.guard_s >= 0.0) {
            return Err(invalid("sounder config", "bad slot timing"));
        }
        if self.burst_duration_ps() >= picoseconds(self.burst_period_s) {
            return Err(invalid(
                "sounder config",
                format!(
                    "burst of {} s does not fit the {} s burst period",
                    self.burst_duration(),
                    self.burst_period_s
                ),
            ));
        }
        Ok(())
    }

    pub fn pair_count(&self) -> usize {
        self.arrays.pair_count()
    }

    fn slot_ps(&self) -> u64 {
        picoseconds(self.waveform_s + self.guard_s)
    }

    fn sweep_ps(&self) -> u64 {
        self.slot_ps() * self.pair_count() as u64
    }

    fn burst_duration_ps(&self) -> u64 {
        self.sweep_ps() * self.snapshots_per_burst as u64
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_ps() as f64 * 1e-12
    }

    /// One MIMO snapshot (all beam pairs).
    pub fn sweep_duration(&self) -> f64 {
        self.sweep_ps() as f64 * 1e-12
    }

    pub fn burst_duration(&self) -> f64 {
        self.burst_duration_ps() as f64 * 1e-12
    }

    pub fn campaign_duration(&self) -> f64 {
        self.bursts as f64 * self.burst_period_s
    }

    pub fn slot_time(&self, burst: usize, snapshot: usize, pair: usize) -> f64 {
        let ps = burst as u64 * picoseconds(self.burst_period_s)
            + snapshot as u64 * self.sweep_ps()
            + pair as u64 * self.slot_ps();
        ps as f64 * 1e-12
    }

    /// All slot start times, `[burst][snapshot][pair]`.
    pub fn slot_timestamps(&self) -> Vec<f64> {
        let pairs = self.pair_count();
        let mut out = Vec::with_capacity(self.bursts * self.snapshots_per_burst * pairs);
        for b in 0..self.bursts {
            for s in 0..self.snapshots_per_burst {
                for p in 0..pairs {
                    out.push(self.slot_time(b, s, p));
                }
            }
        }
        out
    }

    pub fn calibration(&self) -> CalibrationResponse {
        calibration_response(self.calibration, self.tone_count, self.calibration_seed)
    }

    /// Per-tone noise variance in channel-gain units (referenced to 0 dBi
    /// terminals, TX conducted power = EIRP - TX boresight gain).
    pub fn noise_variance(&self) -> f64 {
        if self.noiseless {
            return 0.0;
        }
        let tx_power = self.eirp_dbm - self.arrays.tx_shape.gain_dbi;
        db_to_lin(noise_floor(self) - tx_power)
    }

    pub fn tone_grid(&self) -> ToneGrid {
        ToneGrid {
            count: self.tone_count,
            spacing_hz: self.tone_spacing_hz,
        }
    }
}

/// Thermal noise floor, dBm: `-174 dBm/Hz + 10 log10(B) + NF`.
pub fn noise_floor(config: &SounderConfig) -> f64 {
    thermal_floor_dbm(config.bandwidth_hz, config.noise_figure_db)
}

pub fn thermal_floor_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Largest path loss that still lands `margin_db` above the noise floor at the
/// given EIRP, counting the RX boresight gain.
pub fn max_measurable_path_loss(config: &SounderConfig, eirp_dbm: f64, margin_db: f64) -> f64 {
    eirp_dbm + config.arrays.rx_shape.gain_dbi - noise_floor(config) - margin_db
}

/// Tone frequencies `k · spacing`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneGrid {
    pub count: usize,
    pub spacing_hz: f64,
}

const REANCHOR: usize = 32;

/// Adds `base · exp(-j2π k Δf τ)` for every tone into `out`.
fn accumulate_tones(out: &mut [C64], base: C64, delay: f64, spacing: f64) {
    let step = -2.0 * PI * spacing * delay;
    let rot = C64::from_polar(1.0, step);
    for (chunk_index, chunk) in out.chunks_mut(REANCHOR).enumerate() {
        let k0 = (chunk_index * REANCHOR) as f64;
        let mut ph = base * C64::from_polar(1.0, step * k0);
        for x in chunk.iter_mut() {
            *x += ph;
            ph *= rot;
        }
    }
}

fn beam_factor(path: &PathTruth, tx: &BeamPattern, rx: &BeamPattern) -> f64 {
    (tx.power_gain(path.dod_az, path.dod_el) * rx.power_gain(path.doa_az, path.doa_el)).sqrt()
}

/// Frequency response of one beam pair at slot time `t`:
///
/// `H(f_k) = H_cal(f_k) Σ_l a_l g_tx(DoD_l) g_rx(DoA_l) e^{-j2π f_k τ_l} e^{j2π ν_l (t - epoch_l)}`
pub fn synthesize_response(
    paths: &[PathTruth],
    tx: &BeamPattern,
    rx: &BeamPattern,
    tones: &ToneGrid,
    t: f64,
    cal: &CalibrationResponse,
) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); tones.count];
    for path in paths {
        let base = path.amplitude
            * beam_factor(path, tx, rx)
            * C64::from_polar(1.0, 2.0 * PI * path.doppler * (t - path.epoch));
        accumulate_tones(&mut out, base, path.delay, tones.spacing_hz);
    }
    for (x, c) in out.iter_mut().zip(&cal.gains) {
        *x *= c;
    }
    out
}

/// One burst of measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstData {
    pub index: usize,
    /// `[snapshot][tx][rx][tone]`.
    pub responses: Vec<Complex32>,
    /// `[snapshot][pair]`, seconds.
    pub timestamps: Vec<f64>,
    pub snapshots: usize,
    pub pairs: usize,
    pub tones: usize,
}

impl BurstData {
    pub fn response(&self, snapshot: usize, pair: usize) -> &[Complex32] {
        let start = (snapshot * self.pairs + pair) * self.tones;
        &self.responses[start..start + self.tones]
    }
}

fn noise_seed(seed: u64, burst: usize, snapshot: usize, pair: usize) -> u64 {
    let mut h = seed ^ 0xD1B5_4A32_D192_ED03;
    for v in [burst as u64, snapshot as u64, pair as u64] {
        h = (h ^ v).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        h ^= h >> 29;
    }
    h
}

/// Runs `f` on a rayon pool capped by `DDCS_THREADS` when it is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match std::env::var("DDCS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// Anything that yields the propagation paths present at time `t`.
pub trait PathModel: Sync {
    fn paths_at(&self, t: f64) -> Result<Vec<PathTruth>>;
}

impl PathModel for Scene {
    fn paths_at(&self, t: f64) -> Result<Vec<PathTruth>> {
        enumerate_paths(self, t, 1)
    }
}

impl<F: Fn(f64) -> Vec<PathTruth> + Sync> PathModel for F {
    fn paths_at(&self, t: f64) -> Result<Vec<PathTruth>> {
        Ok(self(t))
    }
}

/// Campaign generator: synthesizes bursts one at a time.
pub struct Campaign<'a> {
    model: Box<dyn PathModel + 'a>,
    config: &'a SounderConfig,
    cal: CalibrationResponse,
    tx_beams: Vec<BeamPattern>,
    rx_beams: Vec<BeamPattern>,
    noise_sigma: f64,
}

impl<'a> Campaign<'a> {
    pub fn new(scene: &Scene, config: &'a SounderConfig) -> Result<Self> {
        config.validate()?;
        scene.validate()?;
        let last_slot = config.slot_time(
            config.bursts - 1,
            config.snapshots_per_burst - 1,
            config.pair_count() - 1,
        ) + config.slot_duration();
        if scene.duration + 1e-12 < last_slot {
            return Err(Error::ScenarioTooShort {
                scene_s: scene.duration,
                needed_s: last_slot,
            });
        }
        let mut scene = scene.clone().with_phase_seed(config.seed);
        scene.carrier_hz = config.center_frequency_hz;
        Self::from_model(scene, config)
    }

    /// Campaign over an arbitrary path model, used as-is (no duration check,
    /// no phase seeding).
    pub fn from_model(model: impl PathModel + 'a, config: &'a SounderConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            model: Box::new(model),
            config,
            cal: config.calibration(),
            tx_beams: (0..config.arrays.tx_grid.len()).map(|i| config.arrays.tx_beam(i)).collect(),
            rx_beams: (0..config.arrays.rx_grid.len()).map(|i| config.arrays.rx_beam(i)).collect(),
            noise_sigma: (config.noise_variance() / 2.0).sqrt(),
        })
    }

    fn snapshot(&self, burst: usize, snapshot: usize) -> Result<Vec<Complex32>> {
        let cfg = self.config;
        let tones = cfg.tone_grid();
        let t0 = cfg.slot_time(burst, snapshot, 0);
        let paths = self.model.paths_at(t0)?;
        let n_rx = self.rx_beams.len();
        let mut out = Vec::with_capacity(cfg.pair_count() * tones.count);
        for (ti, tx) in self.tx_beams.iter().enumerate() {
            for (ri, rx) in self.rx_beams.iter().enumerate() {
                let pair = ti * n_rx + ri;
                let t = cfg.slot_time(burst, snapshot, pair);
                let h = synthesize_response(&paths, tx, rx, &tones, t, &self.cal);
                if self.noise_sigma > 0.0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed(cfg.seed, burst, snapshot, pair));
                    out.extend(h.iter().map(|x| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        let y = x + C64::new(re, im) * self.noise_sigma;
                        Complex32::new(y.re as f32, y.im as f32)
                    }));
                } else {
                    out.extend(h.iter().map(|x| Complex32::new(x.re as f32, x.im as f32)));
                }
            }
        }
        Ok(out)
    }

    pub fn burst(&self, burst: usize) -> Result<BurstData> {
        let cfg = self.config;
        let snapshots: Vec<Vec<Complex32>> = (0..cfg.snapshots_per_burst)
            .into_par_iter()
            .map(|s| self.snapshot(burst, s))
            .collect::<Result<_>>()?;
        let pairs = cfg.pair_count();
        let timestamps = (0..cfg.snapshots_per_burst)
            .flat_map(|s| (0..pairs).map(move |p| (s, p)))
            .map(|(s, p)| cfg.slot_time(burst, s, p))
            .collect();
        Ok(BurstData {
            index: burst,
            responses: snapshots.concat(),
            timestamps,
            snapshots: cfg.snapshots_per_burst,
            pairs,
            tones: cfg.tone_count,
        })
    }

    /// Ground-truth paths at `t` (with the campaign's phase seed applied).
    pub fn paths_at(&self, t: f64) -> Result<Vec<PathTruth>> {
        self.model.paths_at(t)
    }
}

/// Whole-campaign measurement tensor, `[burst][snapshot][tx][rx][tone]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementTensor {
    /// bursts, snapshots, tx beams, rx beams, tones.
    pub dims: [usize; 5],
    pub center_frequency_hz: f64,
    pub tone_spacing_hz: f64,
    /// `[burst][snapshot][pair]`.
    pub timestamps: Vec<f64>,
    pub data: Vec<Complex32>,
}

impl MeasurementTensor {
    pub fn header_for(config: &SounderConfig) -> Self {
        Self {
            dims: [
                config.bursts,
                config.snapshots_per_burst,
                config.arrays.tx_grid.len(),
                config.arrays.rx_grid.len(),
                config.tone_count,
            ],
            center_frequency_hz: config.center_frequency_hz,
            tone_spacing_hz: config.tone_spacing_hz,
            timestamps: config.slot_timestamps(),
            data: Vec::new(),
        }
    }

    pub fn pairs(&self) -> usize {
        self.dims[2] * self.dims[3]
    }

    pub fn burst_len(&self) -> usize {
        self.dims[1] * self.pairs() * self.dims[4]
    }

    pub fn burst(&self, b: usize) -> BurstData {
        let len = self.burst_len();
        let per_burst_ts = self.dims[1] * self.pairs();
        BurstData {
            index: b,
            responses: self.data[b * len..(b + 1) * len].to_vec(),
            timestamps: self.timestamps[b * per_burst_ts..(b + 1) * per_burst_ts].to_vec(),
            snapshots: self.dims[1],
            pairs: self.pairs(),
            tones: self.dims[4],
        }
    }

    pub fn response(&self, b: usize, s: usize, tx: usize, rx: usize) -> &[Complex32] {
        let k = self.dims[4];
        let start = (((b * self.dims[1] + s) * self.dims[2] + tx) * self.dims[3] + rx) * k;
        &self.data[start..start + k]
    }
}

/// Streams every burst of the campaign into `sink`, in order.
pub fn run_campaign_with(
    scene: &Scene,
    config: &SounderConfig,
    mut sink: impl FnMut(BurstData) -> Result<()>,
) -> Result<()> {
    let campaign = Campaign::new(scene, config)?;
    for b in 0..config.bursts {
        sink(with_thread_cap(|| campaign.burst(b))?)?;
    }
    Ok(())
}

/// Runs the campaign into memory. Use [`run_campaign_with`] for long campaigns.
pub fn run_campaign(scene: &Scene, config: &SounderConfig) -> Result<MeasurementTensor> {
    let mut tensor = MeasurementTensor::header_for(config);
    tensor.data.reserve(config.bursts * tensor.burst_len());
    run_campaign_with(scene, config, |burst| {
        tensor.data.extend_from_slice(&burst.responses);
        Ok(())
    })?;
    Ok(tensor)
}
