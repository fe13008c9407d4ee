//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ddsounder::array::ArraySetup;
use ddsounder::evaluation::{circular_stats, ghost_filter, rms_delay_spread, BurstSummary, CampaignReport, Evaluator, Mpc, ThresholdRule};
use ddsounder::presets::{Preset, PresetName};
use ddsounder::scene::{doppler_of_path, PathSource, PathTruth, Vec3};
use ddsounder::sounder::{run_campaign_with, Campaign, PathModel, SounderConfig};
use ddsounder::units::{db_to_lin, lin_to_db, wavelength, SPEED_OF_LIGHT};
use ddsounder::waveform::{design_phases, papr, time_domain, MultitoneSpec, DEFAULT_SPACING_HZ, DEFAULT_TONES, PAPR_OVERSAMPLING};
use ddsounder::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    check(elapsed < budget, format!("took {elapsed:.2?}, budget {budget:.0?}"))
}

fn evaluate_model(model: impl PathModel, cfg: &SounderConfig, eval: &ddsounder::evaluation::EvalConfig) -> ddsounder::Result<(Vec<BurstSummary>, CampaignReport)> {
    let campaign = Campaign::from_model(model, cfg)?;
    let mut ev = Evaluator::new(cfg.arrays.clone(), &cfg.calibration(), cfg.tone_spacing_hz, eval.clone())?;
    let mut out = Vec::with_capacity(cfg.bursts);
    for b in 0..cfg.bursts {
        out.push(ev.process(&campaign.burst(b)?)?);
    }
    Ok((out, ev.finish()))
}

fn evaluate_preset(preset: &Preset) -> ddsounder::Result<(Vec<BurstSummary>, CampaignReport)> {
    let cfg = &preset.config.sounder;
    let mut ev = Evaluator::new(cfg.arrays.clone(), &cfg.calibration(), cfg.tone_spacing_hz, preset.config.evaluation.clone())?;
    let mut out = Vec::with_capacity(cfg.bursts);
    run_campaign_with(&preset.scene, cfg, |burst| {
        out.push(ev.process(&burst)?);
        Ok(())
    })?;
    Ok((out, ev.finish()))
}

fn timing_budget() -> Outcome {
    let start = Instant::now();
    let cfg = SounderConfig::default();
    let ts = cfg.slot_timestamps();
    let ps: Vec<i64> = ts.iter().map(|t| (t * 1e12).round() as i64).collect();
    let pairs = cfg.pair_count();
    let snaps = cfg.snapshots_per_burst;
    check(ps.len() == cfg.bursts * snaps * pairs, "timestamp count")?;
    for (i, w) in ps.windows(2).enumerate() {
        let next = i + 1;
        let step = w[1] - w[0];
        let expected = if next % (snaps * pairs) == 0 {
            60_000_000_000 - 7_996_000_000
        } else {
            4_000_000
        };
        check(step == expected, format!("slot {next}: step {step} ps"))?;
    }
    for b in 0..cfg.bursts {
        let base = b * snaps * pairs;
        check(ps[base] == b as i64 * 60_000_000_000, format!("burst {b} start"))?;
        check(ps[base + pairs] - ps[base] == 400_000_000, "sweep is not 400 µs")?;
        let end = ps[base + snaps * pairs - 1] + 4_000_000;
        check(end - ps[base] == 8_000_000_000, "burst is not 8 ms")?;
    }
    let ps_of = |t: f64| (t * 1e12).round() as i64;
    let exact = ps_of(cfg.sweep_duration()) == 400_000_000
        && ps_of(cfg.burst_duration()) == 8_000_000_000
        && ps_of(cfg.burst_period_s) == 60_000_000_000;
    check(exact, "schedule durations")?;
    within_budget(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{} slots: sweep 400 µs, burst 8 ms, period 60 ms ({:.0?})", ps.len(), start.elapsed()))
}

fn papr_design() -> Outcome {
    let start = Instant::now();
    let spec = MultitoneSpec::quadratic(DEFAULT_TONES, DEFAULT_SPACING_HZ);
    let design = design_phases(&spec).map_err(|e| e.to_string())?;
    let measured = papr(&time_domain(&spec.with_phases(design.phases), PAPR_OVERSAMPLING));
    check(measured <= 0.5, format!("PAPR {measured:.3} dB"))?;
    within_budget(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("PAPR {measured:.3} dB at {PAPR_OVERSAMPLING}x oversampling ({:.1?})", start.elapsed()))
}

/// A scatterer closing in on the receiver at `speed`, seen over a single leg.
fn radial_scatterer(speed: f64, lambda: f64) -> impl Fn(f64) -> Vec<PathTruth> + Sync {
    move |t: f64| {
        let rx = Vec3::new(0.0, 0.0, 2.0);
        let pos = Vec3::new(60.0 - speed * t, 0.0, 2.0);
        let length = (pos - rx).norm();
        let doppler = doppler_of_path(&[pos, rx], &[Vec3::new(-speed, 0.0, 0.0), Vec3::zeros()], lambda);
        let amp = C64::from_polar(lambda / (4.0 * PI * length), -2.0 * PI * length / lambda);
        let mut p = PathTruth::synthetic(length / SPEED_OF_LIGHT, 5.0, -5.0, amp, doppler);
        p.epoch = t;
        vec![p]
    }
}

fn doppler_bound() -> Outcome {
    let start = Instant::now();
    let mut cfg = SounderConfig {
        bursts: 20,
        ..SounderConfig::default()
    };
    cfg.seed = 11;
    let lambda = wavelength(cfg.center_frequency_hz);
    let eval = Default::default();
    let run = |speed: f64| -> Result<Vec<f64>, String> {
        let (summaries, _) = evaluate_model(radial_scatterer(speed, lambda), &cfg, &eval).map_err(|e| e.to_string())?;
        summaries
            .iter()
            .map(|s| {
                s.mpcs
                    .iter()
                    .max_by(|a, b| a.power_db.total_cmp(&b.power_db))
                    .and_then(|m| m.doppler_hz)
                    .ok_or_else(|| format!("burst {}: no MPC", s.index))
            })
            .collect()
    };
    let fast = run(13.33)?;
    let worst = fast.iter().map(|f| (f - 1238.5).abs()).fold(0.0, f64::max);
    check(worst <= 62.5, format!("13.33 m/s: estimate off by up to {worst:.1} Hz"))?;
    let over = run(48.6 / 3.6)?;
    check(over.iter().all(|f| *f < 0.0), format!("48.6 km/h did not alias: {over:?}"))?;
    within_budget(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "13.33 m/s -> {:.1} Hz (max error {worst:.1} Hz); 48.6 km/h -> {:.1} Hz, aliased ({:.1?})",
        fast[0],
        over[0],
        start.elapsed()
    ))
}

struct TruePath {
    tx: usize,
    rx: usize,
    delay: f64,
    power_db: f64,
}

fn random_scene(rng: &mut ChaCha8Rng, bin: f64) -> Vec<TruePath> {
    let n = rng.gen_range(1..=5);
    let mut paths: Vec<TruePath> = Vec::new();
    while paths.len() < n {
        let tx = rng.gen_range(0..10);
        let rx = rng.gen_range(0..10);
        let delay = rng.gen_range(20.0..700.0) * bin;
        let clash = paths.iter().any(|p| (p.tx, p.rx) == (tx, rx) || (p.delay - delay).abs() < 4.0 * bin);
        if !clash {
            let power_db = if paths.is_empty() { -85.0 } else { -85.0 - rng.gen_range(0.0..15.0) };
            paths.push(TruePath { tx, rx, delay, power_db });
        }
    }
    paths
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let mut cfg = SounderConfig {
        bursts: 1,
        snapshots_per_burst: 2,
        ..SounderConfig::default()
    };
    let arrays = ArraySetup::default();
    let bin = 1.0 / (cfg.tone_count as f64 * cfg.tone_spacing_hz);
    let eval = Default::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_delay, mut worst_power, mut min_snr) = (0.0f64, 0.0f64, f64::INFINITY);
    for scene in 0..100 {
        let truth = random_scene(&mut rng, bin);
        let paths: Vec<PathTruth> = truth
            .iter()
            .map(|p| {
                let amp = C64::from_polar(db_to_lin(p.power_db).sqrt(), rng.gen_range(0.0..2.0 * PI));
                PathTruth::synthetic(p.delay, arrays.tx_grid.beam(p.tx).0, arrays.rx_grid.beam(p.rx).0, amp, 0.0)
            })
            .collect();
        let weakest = truth.iter().map(|p| p.power_db).fold(f64::INFINITY, f64::min);
        min_snr = min_snr.min(weakest + arrays.tx_shape.gain_dbi + arrays.rx_shape.gain_dbi - lin_to_db(cfg.noise_variance()));
        cfg.seed = scene as u64;
        let (summaries, _) = evaluate_model(move |_t: f64| paths.clone(), &cfg, &eval).map_err(|e| e.to_string())?;
        let found = &summaries[0].mpcs;
        check(found.len() == truth.len(), format!("scene {scene}: {} MPCs for {} paths", found.len(), truth.len()))?;
        for p in &truth {
            let m = found
                .iter()
                .find(|m| (m.tx, m.rx) == (p.tx, p.rx))
                .ok_or_else(|| format!("scene {scene}: path at pair ({}, {}) missed", p.tx, p.rx))?;
            let de = (m.delay - p.delay).abs() / bin;
            let dp = (m.power_db - p.power_db).abs();
            worst_delay = worst_delay.max(de);
            worst_power = worst_power.max(dp);
            check(de <= 1.0, format!("scene {scene}: delay off by {de:.2} bins"))?;
            check(dp <= 0.5, format!("scene {scene}: power off by {dp:.2} dB"))?;
        }
    }
    check(min_snr >= 25.0, format!("per-tone SNR only {min_snr:.1} dB"))?;
    within_budget(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!(
        "100 scenes, SNR >= {min_snr:.0} dB: beams exact, delay error <= {worst_delay:.2} bins, power error <= {worst_power:.2} dB, no ghosts ({:.1?})",
        start.elapsed()
    ))
}

fn blocked_through(preset: &Preset, source: PathSource, t0: f64, t1: f64) -> ddsounder::Result<Option<bool>> {
    let (a, b) = (preset.blocked(source, t0)?, preset.blocked(source, t1)?);
    Ok((a == b).then_some(a))
}

fn case1() -> Outcome {
    let start = Instant::now();
    let mut preset = Preset::build(PresetName::Case1BlockingBus, 50).map_err(|e| e.to_string())?;
    preset.config.sounder.seed = 1;
    let (summaries, report) = evaluate_preset(&preset).map_err(|e| e.to_string())?;
    let burst_len = preset.config.sounder.burst_duration();
    let (mut los_only, mut both, mut idle) = (Vec::new(), Vec::new(), Vec::new());
    for s in &summaries {
        let (t0, t1) = (s.time, s.time + burst_len);
        let los = blocked_through(&preset, PathSource::Los, t0, t1).map_err(|e| e.to_string())?;
        let refl = blocked_through(&preset, PathSource::Facet(0), t0, t1).map_err(|e| e.to_string())?;
        match (los, refl) {
            (Some(true), Some(false)) => los_only.push(s.index),
            (Some(true), Some(true)) => both.push(s.index),
            _ => {}
        }
        if s.index < preset.idle_bursts() {
            idle.push(s.index);
        }
    }
    check(!los_only.is_empty() && !both.is_empty(), "blockage states missing from the run")?;
    let b = &report.beams;
    for &i in los_only.iter().chain(&both) {
        check((b.fixed_excess_db[i] - 20.0).abs() <= 1.0, format!("burst {i}: fixed excess {:.2} dB", b.fixed_excess_db[i]))?;
    }
    for &i in &los_only {
        check((b.adaptive_excess_db[i] - 9.0).abs() <= 1.0, format!("burst {i}: adaptive excess {:.2} dB", b.adaptive_excess_db[i]))?;
    }
    let rms = |i: usize| summaries[i].rms_delay_spread.unwrap_or(f64::NAN) * 1e9;
    for &i in &idle {
        check((rms(i) - 12.0).abs() <= 3.0, format!("idle burst {i}: RMS-DS {:.2} ns", rms(i)))?;
    }
    for &i in &both {
        check(rms(i) >= 35.0, format!("burst {i}: RMS-DS {:.2} ns with both paths blocked", rms(i)))?;
    }
    within_budget(start.elapsed(), Duration::from_secs(120))?;
    let mean = |v: &[usize], f: &dyn Fn(usize) -> f64| v.iter().map(|i| f(*i)).sum::<f64>() / v.len() as f64;
    Ok(format!(
        "fixed {:.2} dB / adaptive {:.2} dB over {} LOS-blocked bursts; RMS-DS {:.1} ns idle -> {:.1} ns both blocked ({:.1?})",
        mean(&los_only, &|i| b.fixed_excess_db[i]),
        mean(&los_only, &|i| b.adaptive_excess_db[i]),
        los_only.len(),
        mean(&idle, &rms),
        mean(&both, &rms),
        start.elapsed()
    ))
}

fn case3() -> Outcome {
    let start = Instant::now();
    let mut preset = Preset::build(PresetName::Case3BlockedLos, 50).map_err(|e| e.to_string())?;
    preset.config.sounder.seed = 3;
    let (summaries, report) = evaluate_preset(&preset).map_err(|e| e.to_string())?;
    let fixed = &report.beams.fixed_excess_db;
    let max = fixed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    check((max - 24.0).abs() <= 1.0, format!("max excess {max:.2} dB"))?;
    let idle_rms: Vec<f64> = summaries[..preset.idle_bursts()].iter().map(|s| s.rms_delay_spread.unwrap_or(f64::NAN) * 1e9).collect();
    check(idle_rms.iter().all(|r| *r <= 10.0), format!("idle RMS-DS {idle_rms:?}"))?;
    // runs of bursts at metal level
    let dips: Vec<usize> = (0..fixed.len()).filter(|i| fixed[*i] >= 20.0).collect();
    let runs: Vec<(usize, usize)> = dips.iter().fold(Vec::new(), |mut runs: Vec<(usize, usize)>, &i| {
        match runs.last_mut() {
            Some(r) if r.1 + 1 == i => r.1 = i,
            _ => runs.push((i, i)),
        }
        runs
    });
    check(runs.len() == 2, format!("expected two metal dips, got runs {runs:?}"))?;
    // interior of the gap, allowing one transition burst at each edge
    let gap: Vec<f64> = fixed[runs[0].1 + 2..runs[1].0 - 1].to_vec();
    check(gap.len() >= 3, "glass plateau too short")?;
    check(gap.iter().all(|x| (5.0..=15.0).contains(x)), format!("plateau outside 5-15 dB: {gap:?}"))?;
    within_budget(start.elapsed(), Duration::from_secs(120))?;
    let plateau = gap.iter().sum::<f64>() / gap.len() as f64;
    Ok(format!(
        "max excess {max:.2} dB, dips at bursts {}-{} and {}-{}, glass plateau {plateau:.2} dB, idle RMS-DS <= {:.2} ns ({:.1?})",
        runs[0].0,
        runs[0].1,
        runs[1].0,
        runs[1].1,
        idle_rms.iter().cloned().fold(0.0, f64::max),
        start.elapsed()
    ))
}

fn statistics() -> Outcome {
    let start = Instant::now();
    let bin = 2.5e-9;
    let rule = ThresholdRule::DELAY_SPREAD;
    for k in [1usize, 4, 9, 23, 100] {
        let mut pdp = vec![0.0; 801];
        pdp[10] = 1.0;
        pdp[10 + k] = 1.0;
        let expected = k as f64 * bin / 2.0;
        let got = rms_delay_spread(&pdp, bin, 0.0, &rule).ok_or("no spread")?;
        check((got - expected).abs() <= 1e-12, format!("two taps {k} bins apart: {got:e}"))?;
        let scaled: Vec<f64> = pdp.iter().map(|x| x * 37.5).collect();
        let got2 = rms_delay_spread(&scaled, bin, 0.0, &rule).ok_or("no spread")?;
        check((got2 - got).abs() <= 1e-12, "RMS-DS not scale invariant")?;
    }
    for delta in [1.0f64, 10.0, 35.0, 60.0, 89.0] {
        let (_, spread) = circular_stats(&[(delta, 1.0), (-delta, 1.0)]).ok_or("no spread")?;
        check((spread.to_radians() - delta.to_radians().sin().abs()).abs() <= 1e-9, format!("±{delta}°: {spread}"))?;
        let (_, scaled) = circular_stats(&[(delta, 1e-9), (-delta, 1e-9)]).ok_or("no spread")?;
        check((scaled - spread).abs() <= 1e-9, "angular spread not scale invariant")?;
    }
    let (_, single) = circular_stats(&[(23.0, 4.0)]).ok_or("no spread")?;
    check(single.abs() <= 1e-9, format!("single MPC spread {single}"))?;
    within_budget(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("RMS-DS and angular-spread oracles exact ({:.1?})", start.elapsed()))
}

fn mpc(tx: usize, rx: usize, bin: usize, power_db: f64) -> Mpc {
    let beam = |i: usize| -45.0 + 10.0 * i as f64;
    Mpc {
        burst: 0,
        tx,
        rx,
        bin,
        delay: bin as f64 * 2.5e-9,
        dod_az: beam(tx),
        doa_az: beam(rx),
        power_db,
        doppler_hz: None,
        track: None,
    }
}

fn ghosts() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut injected, mut removed) = (0usize, 0usize);
    for scene in 0..100 {
        let mut truth: Vec<Mpc> = Vec::new();
        let n = rng.gen_range(1..=5);
        while truth.len() < n {
            let (tx, rx, bin) = (rng.gen_range(0..10), rng.gen_range(0..10), rng.gen_range(10..780));
            if truth.iter().all(|m| (m.tx, m.rx) != (tx, rx) && m.bin.abs_diff(bin) >= 4) {
                truth.push(mpc(tx, rx, bin, -rng.gen_range(0.0..15.0)));
            }
        }
        truth.sort_by_key(|m| m.bin);
        check(ghost_filter(&truth, -20.0, 3.0) == truth, format!("scene {scene}: filter altered a ghost-free list"))?;
        let mut all = truth.clone();
        for t in &truth {
            for _ in 0..rng.gen_range(1..=3) {
                let (tx, rx) = loop {
                    let pair = if rng.gen_bool(0.5) { (t.tx, rng.gen_range(0..10)) } else { (rng.gen_range(0..10), t.rx) };
                    if all.iter().all(|m| (m.tx, m.rx) != pair) {
                        break pair;
                    }
                };
                let bin = (t.bin as i64 + rng.gen_range(-1..=1)) as usize;
                all.push(mpc(tx, rx, bin, t.power_db - 20.0 + rng.gen_range(-0.5..0.5)));
                injected += 1;
            }
        }
        let kept = ghost_filter(&all, -20.0, 3.0);
        for t in &truth {
            check(kept.iter().any(|k| (k.tx, k.rx, k.bin) == (t.tx, t.rx, t.bin)), format!("scene {scene}: true path removed"))?;
        }
        removed += all.len() - kept.len();
    }
    let recall = removed as f64 / injected as f64;
    check(recall >= 0.95, format!("recall {recall:.3}"))?;
    within_budget(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{injected} ghosts injected, recall {recall:.3}, true-path precision 1.0, identity on clean lists ({:.1?})", start.elapsed()))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ddsounder")).args(args).env("DDCS_THREADS", "1").output().map_err(|e| e.to_string())?;
    check(out.status.success(), format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn read_all(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.map_err(|e| e.to_string())?;
            Ok((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).map_err(|e| e.to_string())?))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let tensor = dir.join("m.ddcs");
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let tensor_s = tensor.to_str().unwrap();
        run_cli(&["simulate", "--preset", "case2_moving_scatterers", "--seed", "42", "--bursts", "20", "--out", tensor_s])?;
        let eval_dir = dir.join("eval");
        run_cli(&["evaluate", "--in", tensor_s, "--out-dir", eval_dir.to_str().unwrap()])?;
        outputs.push((std::fs::read(&tensor).map_err(|e| e.to_string())?, read_all(&eval_dir)?));
    }
    check(outputs[0].0 == outputs[1].0, "tensor files differ")?;
    check(outputs[0].1 == outputs[1].1, "evaluation outputs differ")?;
    Ok(format!("tensor ({} bytes) and {} output files byte-identical across runs ({:.1?})", outputs[0].0.len(), outputs[0].1.len(), start.elapsed()))
}

fn main() {
    // keep the test binary quiet under `cargo test -- --list` and similar
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [(&str, Criterion); 9] = [
        ("timing budget", timing_budget),
        ("PAPR", papr_design),
        ("Doppler bound", doppler_bound),
        ("MPC round trip", round_trip),
        ("blocking bus", case1),
        ("blocked LOS", case3),
        ("statistics oracles", statistics),
        ("ghost filter", ghosts),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("PASS criterion {}: {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
