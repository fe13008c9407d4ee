//! Ground-truth multipath of a small street scene over time: a van drives
//! across a LOS link next to a building, reflecting off its front on the way
//! in and blocking the LOS as it crosses.
//!
//! `cargo run --release --example scene_paths`

use ddsounder::config::parse_scene;
use ddsounder::scene::enumerate_paths;
use ddsounder::units::lin_to_db;

const SCENE: &str = r#"
schema = 1
duration = 6.0

[tx]
position = [0.0, 0.0]
height = 2.5
azimuth = 0.0

[rx]
position = [30.0, 0.0]
height = 1.8
azimuth = 180.0

[[facets]]
center = [15.0, 10.0]
normal_azimuth = -90.0
width = 30.0
height = 12.0
reflection_loss_db = 6.0

[[movers]]
id = "van"
size = [5.0, 2.0, 2.6]
profile = [{ fraction = 0.3, material = "glass" }, { fraction = 0.7, material = "metal" }]
waypoints = [{ t = 0.0, position = [15.0, -20.0] }, { t = 6.0, position = [15.0, 30.0] }]
reflection = { face = "front", loss_db = 10.0 }
"#;

fn main() -> ddsounder::Result<()> {
    let scene = parse_scene(SCENE, "inline.toml".as_ref())?;
    for t in [0.0, 1.5, 2.1, 2.4, 2.7, 4.5] {
        println!("t = {t:.1} s");
        for p in enumerate_paths(&scene, t, 1)? {
            println!(
                "  {:<10} {:7.2} m {:7.2} ns  dod {:6.1}°  doa {:6.1}°  {:7.2} dB  {:8.1} Hz  blocked {:5} ({:.0} dB)",
                format!("{:?}", p.source),
                p.length,
                p.delay * 1e9,
                p.dod_az,
                p.doa_az,
                lin_to_db(p.amplitude.norm_sqr()),
                p.doppler,
                p.blocked(),
                p.blockage.loss_db
            );
        }
    }
    Ok(())
}
