//! Drivers behind the `ddsounder` binary.
//!
//! `simulate` streams a campaign into a `DDCS` file, `evaluate` turns a file
//! into CSV tables and binary grids, `report` summarises an evaluation
//! directory. All outputs are a pure function of the inputs and the seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::array::ArraySetup;
use crate::config::{config_to_toml, load_config, load_scene, scene_to_toml, RunConfig};
use crate::error::{Error, Result};
use crate::evaluation::{BurstSummary, CampaignReport, Evaluator};
use crate::presets::{Preset, PresetName};
use crate::scene::Scene;
use crate::sounder::{run_campaign_with, with_thread_cap, MeasurementTensor};
use crate::tensor_io::{write_grid, DdcsHeader, DdcsReader, DdcsWriter, Grid};
use crate::units::lin_to_db;

pub const STATS_CSV: &str = "stats.csv";
pub const MPCS_CSV: &str = "mpcs.csv";
pub const TRACKS_CSV: &str = "tracks.csv";
pub const PDP_GRID: &str = "pdp_time.bin";
pub const DOPPLER_GRID: &str = "doppler.bin";

#[derive(Debug, Clone, Default)]
pub struct SimulateArgs {
    pub scene: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub preset: Option<PresetName>,
    pub seed: u64,
    pub out: PathBuf,
    pub bursts: Option<usize>,
    pub noiseless: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSummary {
    pub dims: [usize; 5],
    pub sweep_s: f64,
    pub burst_s: f64,
    pub burst_period_s: f64,
    pub campaign_s: f64,
}

impl std::fmt::Display for SimulateSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [b, s, t, r, k] = self.dims;
        writeln!(f, "dims [{b}][{s}][{t}][{r}][{k}]")?;
        writeln!(f, "sweep {:.3} µs", self.sweep_s * 1e6)?;
        writeln!(f, "burst {:.3} ms every {:.3} ms", self.burst_s * 1e3, self.burst_period_s * 1e3)?;
        write!(f, "campaign {:.3} s", self.campaign_s)
    }
}

/// Resolves the scene and run configuration from files and/or a preset.
pub fn resolve_inputs(args: &SimulateArgs) -> Result<(Scene, RunConfig)> {
    let (scene, mut config) = match (&args.preset, &args.scene) {
        (Some(name), None) => {
            let bursts = args.bursts.unwrap_or(RunConfig::default().sounder.bursts);
            let preset = Preset::build(*name, bursts)?;
            let config = match &args.config {
                Some(path) => load_config(path)?,
                None => preset.config,
            };
            (preset.scene, config)
        }
        (None, Some(path)) => {
            let scene = load_scene(path)?;
            let config = match &args.config {
                Some(path) => load_config(path)?,
                None => RunConfig::default(),
            };
            (scene, config)
        }
        (Some(_), Some(_)) => return Err(Error::Missing("give either --scene or --preset, not both".into())),
        (None, None) => return Err(Error::Missing("--scene (or --preset) is required".into())),
    };
    if let Some(b) = args.bursts {
        config.sounder.bursts = b;
    }
    config.sounder.seed = args.seed;
    config.sounder.noiseless |= args.noiseless;
    Ok((scene, config))
}

fn partial_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    out.with_file_name(name)
}

/// Runs a campaign into `args.out`. Nothing is left at `args.out` on failure.
pub fn simulate(args: &SimulateArgs) -> Result<SimulateSummary> {
    let (scene, config) = resolve_inputs(args)?;
    let cfg = &config.sounder;
    let header = DdcsHeader::of(&MeasurementTensor::header_for(cfg));
    let tmp = partial_path(&args.out);
    let result = (|| -> Result<()> {
        let mut writer = DdcsWriter::create(&tmp, header.clone())?;
        run_campaign_with(&scene, cfg, |burst| writer.write_burst(&burst.responses))?;
        writer.finish()?;
        fs::rename(&tmp, &args.out)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result?;
    Ok(SimulateSummary {
        dims: header.dims,
        sweep_s: cfg.sweep_duration(),
        burst_s: cfg.burst_duration(),
        burst_period_s: cfg.burst_period_s,
        campaign_s: cfg.campaign_duration(),
    })
}

#[derive(Debug, Clone, Default)]
pub struct EvaluateArgs {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub config: Option<PathBuf>,
    pub det_margin_db: Option<f64>,
    pub idle_bursts: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatsRow {
    pub burst: usize,
    pub time_s: f64,
    pub idle: u8,
    pub noise_db: f64,
    pub path_gain_db: Option<f64>,
    pub rms_delay_spread_ns: Option<f64>,
    pub dod_mean_deg: Option<f64>,
    pub dod_spread_deg: Option<f64>,
    pub doa_mean_deg: Option<f64>,
    pub doa_spread_deg: Option<f64>,
    pub mpcs: usize,
    pub best_tx_deg: f64,
    pub best_rx_deg: f64,
    pub best_gain_db: f64,
    pub fixed_gain_db: f64,
    pub fixed_excess_db: f64,
    pub adaptive_excess_db: f64,
    pub switched_tx_deg: f64,
    pub switched_rx_deg: f64,
    pub switch_loss_db: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MpcRow {
    pub burst: usize,
    pub track: Option<usize>,
    pub tx_deg: f64,
    pub rx_deg: f64,
    pub bin: usize,
    pub delay_ns: f64,
    pub power_db: f64,
    pub doppler_hz: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrackRow {
    pub track: usize,
    pub first_burst: usize,
    pub last_burst: usize,
    pub span_bursts: usize,
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateSummary {
    pub bursts: usize,
    pub mpcs: usize,
    pub tracks: usize,
}

/// Evaluation settings for a file with the given header.
fn evaluation_setup(header: &DdcsHeader, args: &EvaluateArgs) -> Result<RunConfig> {
    let [_, snapshots, n_tx, n_rx, tones] = header.dims;
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let s = &mut config.sounder;
    if args.config.is_none() && (s.arrays.tx_grid.len(), s.arrays.rx_grid.len()) != (n_tx, n_rx) {
        s.arrays = ArraySetup::for_dims(n_tx, n_rx);
    }
    if (s.arrays.tx_grid.len(), s.arrays.rx_grid.len()) != (n_tx, n_rx) {
        return Err(Error::Format(format!(
            "file has a {n_tx} x {n_rx} beam grid, configuration has {} x {}",
            s.arrays.tx_grid.len(),
            s.arrays.rx_grid.len()
        )));
    }
    s.tone_count = tones;
    s.tone_spacing_hz = header.tone_spacing_hz;
    s.snapshots_per_burst = snapshots;
    if let Some(m) = args.det_margin_db {
        config.evaluation = config.evaluation.with_detection_margin(m);
    }
    if let Some(k) = args.idle_bursts {
        config.evaluation.idle_bursts = k;
    }
    Ok(config)
}

fn opt_deg(x: Option<(f64, f64)>) -> (Option<f64>, Option<f64>) {
    x.map_or((None, None), |(m, s)| (Some(m), Some(s)))
}

fn stats_rows(summaries: &[BurstSummary], report: &CampaignReport, arrays: &ArraySetup) -> Vec<StatsRow> {
    let n_rx = arrays.rx_grid.len();
    let angles = |p: usize| (arrays.tx_grid.beam(p / n_rx).0, arrays.rx_grid.beam(p % n_rx).0);
    let b = &report.beams;
    summaries
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (dod_mean_deg, dod_spread_deg) = opt_deg(s.dod);
            let (doa_mean_deg, doa_spread_deg) = opt_deg(s.doa);
            let (best_tx_deg, best_rx_deg) = angles(b.best_pair[i]);
            let (switched_tx_deg, switched_rx_deg) = angles(report.switching.chosen[i]);
            StatsRow {
                burst: s.index,
                time_s: s.time,
                idle: u8::from(report.idle_bursts.contains(&i)),
                noise_db: lin_to_db(s.noise),
                path_gain_db: s.path_gain_db,
                rms_delay_spread_ns: s.rms_delay_spread.map(|x| x * 1e9),
                dod_mean_deg,
                dod_spread_deg,
                doa_mean_deg,
                doa_spread_deg,
                mpcs: s.mpcs.len(),
                best_tx_deg,
                best_rx_deg,
                best_gain_db: b.best_gain_db[i],
                fixed_gain_db: b.fixed_gain_db[i],
                fixed_excess_db: b.fixed_excess_db[i],
                adaptive_excess_db: b.adaptive_excess_db[i],
                switched_tx_deg,
                switched_rx_deg,
                switch_loss_db: report.switching.loss_db[i],
            }
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<EvaluateSummary> {
    with_thread_cap(|| evaluate_inner(args))
}

fn evaluate_inner(args: &EvaluateArgs) -> Result<EvaluateSummary> {
    let mut reader = DdcsReader::open(&args.input)?;
    let header = reader.header().clone();
    let config = evaluation_setup(&header, args)?;
    let cfg = &config.sounder;
    let mut ev = Evaluator::new(cfg.arrays.clone(), &cfg.calibration(), cfg.tone_spacing_hz, config.evaluation.clone())?;
    let mut summaries = Vec::with_capacity(header.dims[0]);
    while let Some(burst) = reader.next_burst()? {
        summaries.push(ev.process(&burst)?);
    }
    let report = ev.finish();

    fs::create_dir_all(&args.out_dir)?;
    let dir = &args.out_dir;
    write_csv(&dir.join(STATS_CSV), stats_rows(&summaries, &report, &cfg.arrays))?;
    let tx_deg = |i: usize| cfg.arrays.tx_grid.beam(i).0;
    let rx_deg = |i: usize| cfg.arrays.rx_grid.beam(i).0;
    write_csv(
        &dir.join(MPCS_CSV),
        summaries.iter().flat_map(|s| &s.mpcs).map(|m| MpcRow {
            burst: m.burst,
            track: m.track,
            tx_deg: tx_deg(m.tx),
            rx_deg: rx_deg(m.rx),
            bin: m.bin,
            delay_ns: m.delay * 1e9,
            power_db: m.power_db,
            doppler_hz: m.doppler_hz,
        }),
    )?;
    write_csv(
        &dir.join(TRACKS_CSV),
        report.tracks.iter().map(|t| TrackRow {
            track: t.id,
            first_burst: t.first_burst,
            last_burst: t.last_burst,
            span_bursts: t.len(),
            hits: t.hits,
        }),
    )?;
    let grid = |rows: Vec<&Vec<f64>>| -> Result<Grid> {
        let cols = rows.first().map_or(0, |r| r.len());
        Grid::new(rows.len(), cols, rows.iter().flat_map(|r| r.iter().map(|x| *x as f32)).collect())
    };
    write_grid(&dir.join(PDP_GRID), &grid(summaries.iter().map(|s| &s.omni).collect())?)?;
    write_grid(&dir.join(DOPPLER_GRID), &grid(summaries.iter().map(|s| &s.doppler).collect())?)?;
    Ok(EvaluateSummary {
        bursts: summaries.len(),
        mpcs: summaries.iter().map(|s| s.mpcs.len()).sum(),
        tracks: report.tracks.len(),
    })
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::Missing(path.display().to_string()));
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn fmt_opt(x: Option<f64>, unit: &str) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.1} {unit}"))
}

/// Excess loss below this counts as unobstructed, dB.
const BLOCKED_DB: f64 = 3.0;

/// Human-readable summary of an evaluation directory.
pub fn report(dir: &Path) -> Result<String> {
    let stats: Vec<StatsRow> = read_csv(&dir.join(STATS_CSV))?;
    let mpcs: Vec<MpcRow> = read_csv(&dir.join(MPCS_CSV))?;
    let tracks: Vec<TrackRow> = read_csv(&dir.join(TRACKS_CSV))?;
    if stats.is_empty() {
        return Err(Error::Missing(format!("{} has no bursts", dir.join(STATS_CSV).display())));
    }
    let mut out = String::new();
    let idle: Vec<&StatsRow> = stats.iter().filter(|r| r.idle == 1).collect();
    let blocked: Vec<&StatsRow> = stats.iter().filter(|r| r.fixed_excess_db >= BLOCKED_DB).collect();
    let col = |rows: &[&StatsRow], f: fn(&StatsRow) -> Option<f64>| -> Vec<f64> { rows.iter().filter_map(|r| f(r)).collect() };
    let all: Vec<&StatsRow> = stats.iter().collect();
    let max = |v: &[f64]| v.iter().cloned().fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    let min = |v: &[f64]| v.iter().cloned().fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))));

    let _ = writeln!(out, "bursts            {} ({} idle reference)", stats.len(), idle.len());
    if let Some(first) = idle.first() {
        let _ = writeln!(out, "fixed beam pair   tx {:+.0}° / rx {:+.0}°", first.best_tx_deg, first.best_rx_deg);
    }
    let _ = writeln!(out, "\nexcess loss (vs idle)   fixed beam   adaptive beam");
    let fixed = col(&all, |r| Some(r.fixed_excess_db));
    let adaptive = col(&all, |r| Some(r.adaptive_excess_db));
    let _ = writeln!(out, "  max                   {:>10}   {:>13}", fmt_opt(max(&fixed), "dB"), fmt_opt(max(&adaptive), "dB"));
    let _ = writeln!(
        out,
        "  median when blocked   {:>10}   {:>13}   ({} bursts with fixed excess >= {BLOCKED_DB} dB)",
        fmt_opt(median(col(&blocked, |r| Some(r.fixed_excess_db))), "dB"),
        fmt_opt(median(col(&blocked, |r| Some(r.adaptive_excess_db))), "dB"),
        blocked.len()
    );
    let _ = writeln!(out, "  plateaus (>= 2 bursts):");
    let mut start = 0;
    for i in 1..=stats.len() {
        let key = |r: &StatsRow| (r.fixed_excess_db.round() as i64, r.adaptive_excess_db.round() as i64);
        if i == stats.len() || key(&stats[i]) != key(&stats[start]) {
            let (f, a) = key(&stats[start]);
            if i - start >= 2 && (f != 0 || a != 0) {
                let _ = writeln!(
                    out,
                    "    bursts {:>4}-{:<4} fixed {:>3} dB, adaptive {:>3} dB",
                    stats[start].burst,
                    stats[i - 1].burst,
                    f,
                    a
                );
            }
            start = i;
        }
    }

    let rms_idle = median(col(&idle, |r| r.rms_delay_spread_ns));
    let rms_all = col(&all, |r| r.rms_delay_spread_ns);
    let _ = writeln!(out, "\nRMS delay spread  idle median {}, range {} .. {}", fmt_opt(rms_idle, "ns"), fmt_opt(min(&rms_all), "ns"), fmt_opt(max(&rms_all), "ns"));
    let gains = col(&all, |r| r.path_gain_db);
    let _ = writeln!(out, "path gain         idle median {}, min {}", fmt_opt(median(col(&idle, |r| r.path_gain_db)), "dB"), fmt_opt(min(&gains), "dB"));
    for (label, f) in [("DoD spread", (|r: &StatsRow| r.dod_spread_deg) as fn(&StatsRow) -> Option<f64>), ("DoA spread", |r: &StatsRow| r.doa_spread_deg)] {
        let v = col(&all, f);
        let _ = writeln!(out, "{label:<17} median {}, range {} .. {}", fmt_opt(median(v.clone()), "deg"), fmt_opt(min(&v), "deg"), fmt_opt(max(&v), "deg"));
    }

    let best_changes = stats.windows(2).filter(|w| (w[0].best_tx_deg, w[0].best_rx_deg) != (w[1].best_tx_deg, w[1].best_rx_deg)).count();
    let switches = stats.windows(2).filter(|w| (w[0].switched_tx_deg, w[0].switched_rx_deg) != (w[1].switched_tx_deg, w[1].switched_rx_deg)).count();
    let shortfall: f64 = stats.iter().map(|r| r.switch_loss_db).sum();
    let _ = writeln!(out, "\nbest-pair changes {best_changes}");
    let _ = writeln!(out, "beam switching    {switches} switches, cumulative shortfall {shortfall:.1} dB");

    let longest = tracks.iter().map(|t| t.span_bursts).max().unwrap_or(0);
    let _ = writeln!(out, "\nMPCs              {} detections in {} tracks (longest {} bursts)", mpcs.len(), tracks.len(), longest);
    let dopp: Vec<f64> = mpcs.iter().filter_map(|m| m.doppler_hz).collect();
    let _ = writeln!(out, "MPC Doppler       {} .. {}", fmt_opt(min(&dopp), "Hz"), fmt_opt(max(&dopp), "Hz"));
    Ok(out)
}

/// Writes `scene.toml` and `config.toml` for a preset into `dir`.
pub fn export_preset(name: PresetName, bursts: usize, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let preset = Preset::build(name, bursts)?;
    fs::create_dir_all(dir)?;
    let scene = dir.join("scene.toml");
    let config = dir.join("config.toml");
    fs::write(&scene, scene_to_toml(&preset.scene))?;
    fs::write(&config, config_to_toml(&preset.config))?;
    Ok((scene, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_name() {
        assert_eq!(partial_path(Path::new("/tmp/a.ddcs")), PathBuf::from("/tmp/a.ddcs.partial"));
    }

    #[test]
    fn missing_inputs() {
        let args = SimulateArgs::default();
        assert!(matches!(resolve_inputs(&args), Err(Error::Missing(_))));
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(report(dir.path()), Err(Error::Missing(_))));
    }
}
