//! Cars and pedestrians as moving reflectors next to a static building
//! reflection: per-MPC Doppler, track lifetimes and beam switching.
//!
//! `cargo run --release --example case2_doppler [bursts]`

use ddsounder::evaluation::{beam_switch_strategy, Evaluator};
use ddsounder::presets::{Preset, PresetName};
use ddsounder::scene::PathSource;
use ddsounder::sounder::run_campaign_with;

fn main() -> ddsounder::Result<()> {
    let bursts = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(40);
    let preset = Preset::build(PresetName::Case2MovingScatterers, bursts)?;
    let cfg = &preset.config.sounder;
    let mut ev = Evaluator::new(cfg.arrays.clone(), &cfg.calibration(), cfg.tone_spacing_hz, preset.config.evaluation.clone())?;
    let mut gains = Vec::new();
    println!("burst  mpc  delay_ns  dod  doa  power_dB  doppler_Hz | truth");
    run_campaign_with(&preset.scene, cfg, |burst| {
        let t = burst.timestamps[0];
        let truth = preset.paths_at(t + 0.004)?;
        let s = ev.process(&burst)?;
        for (i, m) in s.mpcs.iter().enumerate() {
            let nearest = truth
                .iter()
                .min_by(|a, b| (a.delay - m.delay).abs().total_cmp(&(b.delay - m.delay).abs()))
                .map(|p| {
                    let who = match p.source {
                        PathSource::Mover(k) => preset.scene.movers[k].id.clone(),
                        other => format!("{other:?}"),
                    };
                    format!("{who} {:.0} Hz", p.doppler)
                })
                .unwrap_or_default();
            println!(
                "{:5} {:4} {:9.2} {:4} {:4} {:9.2} {:11.1} | {}",
                s.index,
                i,
                m.delay * 1e9,
                m.dod_az,
                m.doa_az,
                m.power_db,
                m.doppler_hz.unwrap_or(f64::NAN),
                nearest
            );
        }
        gains.push(s.pair_gains_db);
        Ok(())
    })?;
    let report = ev.finish();
    println!("\n{} tracks", report.tracks.len());
    for t in &report.tracks {
        println!("  track {:3}: bursts {:3}..={:3}, {} hits", t.id, t.first_burst, t.last_burst, t.hits);
    }
    for h in [0.0, 3.0, 10.0] {
        let s = beam_switch_strategy(&gains, h, 1);
        println!("hysteresis {h:4.1} dB: {} switches, {:.1} dB cumulative shortfall", s.switches, s.total_loss_db);
    }
    Ok(())
}
