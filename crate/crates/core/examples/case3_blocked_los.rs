//! Bus with a metal / glass / metal profile crossing a short LOS link: the
//! fixed-beam excess loss shows two metal dips around a glass plateau.
//!
//! `cargo run --release --example case3_blocked_los [bursts]`

use ddsounder::evaluation::Evaluator;
use ddsounder::presets::{Preset, PresetName};
use ddsounder::sounder::run_campaign_with;

fn main() -> ddsounder::Result<()> {
    let bursts = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50);
    let preset = Preset::build(PresetName::Case3BlockedLos, bursts)?;
    let cfg = &preset.config.sounder;
    let mut ev = Evaluator::new(cfg.arrays.clone(), &cfg.calibration(), cfg.tone_spacing_hz, preset.config.evaluation.clone())?;
    let mut summaries = Vec::new();
    run_campaign_with(&preset.scene, cfg, |burst| {
        summaries.push(ev.process(&burst)?);
        Ok(())
    })?;
    let report = ev.finish();
    let idle = report.idle_bursts.len();
    let idle_rms: f64 = summaries[..idle].iter().filter_map(|s| s.rms_delay_spread).sum::<f64>() / idle as f64;
    println!("idle bursts {idle}, mean idle RMS delay spread {:.2} ns", idle_rms * 1e9);
    println!("burst  time_s  fixed_dB  adaptive_dB  path_gain_dB");
    for (s, (f, a)) in summaries.iter().zip(report.beams.fixed_excess_db.iter().zip(&report.beams.adaptive_excess_db)) {
        println!("{:5} {:7.2} {:9.2} {:12.2} {:13.2}", s.index, s.time, f, a, s.path_gain_db.unwrap_or(f64::NAN));
    }
    let max = report.beams.fixed_excess_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("max fixed-beam excess loss {max:.2} dB");
    Ok(())
}
