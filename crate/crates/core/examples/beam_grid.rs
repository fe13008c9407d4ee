//! The 10 x 10 switched-beam grid: pattern cuts, pair indexing and the
//! gain a path sees when it falls between beams.
//!
//! `cargo run --release --example beam_grid`

use ddsounder::array::{enumerate_beam_pairs, pair_index, ArraySetup, BeamPair};
use ddsounder::units::lin_to_db;

fn main() {
    let arrays = ArraySetup::default();
    let grid = &arrays.tx_grid;
    println!("beams (deg): {:?}", grid.azimuths);
    let pairs = enumerate_beam_pairs(grid, &arrays.rx_grid);
    println!("{} beam pairs per sweep", pairs.len());

    println!("\npattern of the 5° beam, relative gain (dB):");
    let beam = arrays.tx_beam(grid.nearest(5.0));
    for az in (-40..=50).step_by(5) {
        let rel = lin_to_db(beam.relative_power(az as f64, 0.0));
        println!("  {az:4}°  {rel:7.2}  {}", "#".repeat(((rel + 20.0) * 2.0).max(0.0) as usize));
    }

    println!("\ngain of the best beam for a path at azimuth a (scalloping):");
    for a in [0.0, 1.0, 2.5, 5.0, 7.5, 10.0, 47.0, 60.0] {
        let best = grid.nearest(a);
        let rel = lin_to_db(arrays.tx_beam(best).relative_power(a, 0.0));
        println!("  {a:5.1}°  beam {:+4.0}°  {rel:6.2} dB", grid.beam(best).0);
    }

    let los = BeamPair { tx: grid.nearest(-15.0), rx: arrays.rx_grid.nearest(-25.0) };
    println!("\npair [tx -15°, rx -25°] has sweep index {}", pair_index(los, arrays.rx_grid.len()));
}
