//! Beam management on a series where a moving reflector briefly beats the
//! static beam pair: how hysteresis and dwell trade switches for shortfall.
//!
//! `cargo run --release --example beam_switching`

use ddsounder::evaluation::{beam_pair_analysis, beam_switch_strategy};

fn main() {
    // two pairs over 200 bursts: the static pair at -115 dB, and a mover pair
    // that rises above it by up to 6 dB for about 0.8 s, three times
    let gains: Vec<Vec<f64>> = (0..200)
        .map(|b| {
            let mover = [40.0, 100.0, 160.0]
                .iter()
                .map(|c| -121.0 + 12.0 * (-((b as f64 - c) / 8.0).powi(2)).exp())
                .fold(f64::NEG_INFINITY, f64::max);
            vec![-115.0 + 0.3 * ((b as f64) * 0.7).sin(), mover]
        })
        .collect();
    let analysis = beam_pair_analysis(&gains, &(0..10).collect::<Vec<_>>());
    let max_adv = gains.iter().map(|g| g[1] - g[0]).fold(f64::NEG_INFINITY, f64::max);
    println!("fixed pair {}, mover advantage up to {max_adv:.1} dB", analysis.fixed_pair);
    println!("max adaptive gain over fixed {:.1} dB", analysis.fixed_excess_db.iter().zip(&analysis.adaptive_excess_db).map(|(f, a)| f - a).fold(0.0, f64::max));
    println!("\nhysteresis  dwell  switches  shortfall (dB, summed)");
    for h in [0.0, 1.0, 3.0, 6.0, 10.0] {
        for dwell in [1, 5] {
            let s = beam_switch_strategy(&gains, h, dwell);
            println!("{h:10.1} {dwell:6} {:9} {:10.1}", s.switches, s.total_loss_db);
        }
    }
}
