//! Streams a short campaign into a DDCS file, reads it back and evaluates it,
//! then writes and re-reads the omni PDP grid.
//!
//! `cargo run --release --example tensor_file_roundtrip`

use ddsounder::evaluation::evaluate_tensor;
use ddsounder::presets::{Preset, PresetName};
use ddsounder::sounder::MeasurementTensor;
use ddsounder::tensor_io::{read_grid, read_tensor, write_grid, DdcsHeader, DdcsWriter, Grid};
use ddsounder::sounder::run_campaign_with;

fn main() -> ddsounder::Result<()> {
    let dir = std::env::temp_dir().join("ddsounder-roundtrip");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("case3.ddcs");

    let mut preset = Preset::build(PresetName::Case3BlockedLos, 5)?;
    preset.config.sounder.seed = 3;
    let cfg = &preset.config.sounder;
    let mut writer = DdcsWriter::create(&path, DdcsHeader::of(&MeasurementTensor::header_for(cfg)))?;
    run_campaign_with(&preset.scene, cfg, |burst| writer.write_burst(&burst.responses))?;
    writer.finish()?;
    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());

    let tensor = read_tensor(&path)?;
    println!("dims {:?}, fc {:.2} GHz, Δf {:.0} kHz", tensor.dims, tensor.center_frequency_hz / 1e9, tensor.tone_spacing_hz / 1e3);
    let (summaries, _) = evaluate_tensor(&tensor, &cfg.arrays, &cfg.calibration(), &preset.config.evaluation)?;
    for s in &summaries {
        println!("burst {}: path gain {:.2} dB, {} MPCs", s.index, s.path_gain_db.unwrap_or(f64::NAN), s.mpcs.len());
    }

    let grid = Grid::new(summaries.len(), summaries[0].omni.len(), summaries.iter().flat_map(|s| s.omni.iter().map(|x| *x as f32)).collect())?;
    let grid_path = dir.join("pdp_time.bin");
    write_grid(&grid_path, &grid)?;
    assert_eq!(read_grid(&grid_path)?, grid);
    println!("PDP grid {} x {} round-tripped", grid.rows, grid.cols);
    Ok(())
}
