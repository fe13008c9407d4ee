//! Designs the 801-tone sounding signal and compares its crest factor with
//! the quadratic-phase starting point and random phases.
//!
//! `cargo run --release --example waveform_papr`

use ddsounder::waveform::{design_phases, papr, time_domain, MultitoneSpec, DEFAULT_SPACING_HZ, DEFAULT_TONES, PAPR_OVERSAMPLING};
use rand::{Rng, SeedableRng};

fn main() -> ddsounder::Result<()> {
    let spec = MultitoneSpec::quadratic(DEFAULT_TONES, DEFAULT_SPACING_HZ);
    println!("{} tones, {:.1} MHz, {:.1} µs symbol", spec.tone_count, spec.bandwidth() / 1e6, spec.duration() * 1e6);

    let mut rng = rand::rngs::StdRng::seed_from_u64(1);
    let random: Vec<f64> = (0..spec.tone_count).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let random = spec.clone().with_phases(random);
    println!("random phases     PAPR {:5.2} dB", papr(&time_domain(&random, PAPR_OVERSAMPLING)));
    println!("quadratic phases  PAPR {:5.2} dB", papr(&time_domain(&spec, PAPR_OVERSAMPLING)));

    let design = design_phases(&spec)?;
    let designed = spec.with_phases(design.phases);
    println!(
        "designed phases   PAPR {:5.2} dB after {} iterations ({}x oversampling)",
        papr(&time_domain(&designed, PAPR_OVERSAMPLING)),
        design.iterations,
        PAPR_OVERSAMPLING
    );
    Ok(())
}
