//! The three built-in street scenarios.
//!
//! Geometry is synthetic: positions are chosen so the sounder sees the path
//! lengths, beam directions and blockage losses of each scenario, and facet
//! losses are calibrated against the default beam grid at build time.
//!
//! - `case1_blocking_bus`: LOS (51 m) and a building reflection (57.75 m, 9 dB
//!   weaker at its best beam pair) plus two weak late reflections. A metal bus
//!   (20 dB) first blocks the LOS, then the reflection, then stops.
//! - `case2_moving_scatterers`: side-by-side link looking down the street at a
//!   static facet, with cars and pedestrians acting as moving reflectors.
//! - `case3_blocked_los`: short LOS link crossed by a bus whose profile is
//!   metal / glass / metal (24 / 10 / 24 dB).

use serde::{Deserialize, Serialize};

use crate::array::ArraySetup;
use crate::config::RunConfig;
use crate::error::{invalid, Result};
use crate::scene::{
    enumerate_paths, Face, Material, MaterialSpan, MaterialTable, Mover, MoverReflection, PathSource, PathTruth, Pose,
    ReflectorFacet, Scene, Vec3, Waypoint,
};
use crate::units::{lin_to_db, wrap_deg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Case1BlockingBus,
    Case2MovingScatterers,
    Case3BlockedLos,
}

impl PresetName {
    pub const ALL: [PresetName; 3] = [
        PresetName::Case1BlockingBus,
        PresetName::Case2MovingScatterers,
        PresetName::Case3BlockedLos,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Case1BlockingBus => "case1_blocking_bus",
            PresetName::Case2MovingScatterers => "case2_moving_scatterers",
            PresetName::Case3BlockedLos => "case3_blocked_los",
        }
    }
}

impl std::str::FromStr for PresetName {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| invalid("preset", format!("unknown preset `{s}`")))
    }
}

impl std::fmt::Display for PresetName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A ready-to-run scenario: scene, sounder/evaluation settings and the idle annotation.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: PresetName,
    pub scene: Scene,
    pub config: RunConfig,
}

impl Preset {
    pub fn build(name: PresetName, bursts: usize) -> Result<Self> {
        if bursts == 0 {
            return Err(invalid("bursts", "must be at least 1"));
        }
        let mut config = RunConfig::default();
        config.sounder.bursts = bursts;
        let duration = bursts as f64 * config.sounder.burst_period_s;
        let arrays = &config.sounder.arrays;
        let (scene, idle) = match name {
            PresetName::Case1BlockingBus => case1(duration, arrays, bursts)?,
            PresetName::Case2MovingScatterers => case2(duration, arrays, bursts)?,
            PresetName::Case3BlockedLos => case3(duration, arrays, bursts)?,
        };
        config.evaluation.idle_bursts = idle;
        scene.validate()?;
        Ok(Self { name, scene, config })
    }

    pub fn idle_bursts(&self) -> usize {
        self.config.evaluation.idle_bursts
    }

    /// Ground-truth paths at `t`.
    pub fn paths_at(&self, t: f64) -> Result<Vec<PathTruth>> {
        enumerate_paths(&self.scene, t, 1)
    }

    /// Whether the path from `source` exists and is blocked at `t`.
    pub fn blocked(&self, source: PathSource, t: f64) -> Result<bool> {
        Ok(self.paths_at(t)?.iter().any(|p| p.source == source && p.blocked()))
    }
}

/// Power of a path at its best beam pair, boresight gains removed.
pub fn best_pair_power(path: &PathTruth, arrays: &ArraySetup) -> f64 {
    let best = |n: usize, beam: &dyn Fn(usize) -> f64| (0..n).map(beam).fold(0.0, f64::max);
    let tx = best(arrays.tx_grid.len(), &|i| arrays.tx_beam(i).relative_power(path.dod_az, path.dod_el));
    let rx = best(arrays.rx_grid.len(), &|i| arrays.rx_beam(i).relative_power(path.doa_az, path.doa_el));
    path.amplitude.norm_sqr() * tx * rx
}

fn az_of(d: Vec3) -> f64 {
    d.y.atan2(d.x).to_degrees()
}

fn unit_az(az: f64) -> Vec3 {
    let a = az.to_radians();
    Vec3::new(a.cos(), a.sin(), 0.0)
}

fn flat(v: Vec3) -> Vec3 {
    Vec3::new(v.x, v.y, 0.0)
}

/// Smallest `x` in `[lo, hi]` for which `pred` holds, assuming it is monotone.
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Vertical facet at ground point `p` oriented so TX→p→RX is specular.
fn specular_facet(scene: &Scene, p: Vec3, width: f64) -> ReflectorFacet {
    let to_tx = flat(scene.tx.position - p).normalize();
    let to_rx = flat(scene.rx.position - p).normalize();
    ReflectorFacet::vertical(p, az_of(to_tx + to_rx), width, 20.0, 0.0)
}

/// Unfolded 3D length of TX→p→RX over a vertical reflector at ground point `p`.
fn reflected_length(scene: &Scene, p: Vec3) -> f64 {
    let (tx, rx) = (scene.tx.position, scene.rx.position);
    let horizontal = flat(p - tx).norm() + flat(rx - p).norm();
    horizontal.hypot(tx.z - rx.z)
}

/// Point along the TX ray at relative azimuth `dod` whose reflected length is `length`.
fn reflection_point(scene: &Scene, dod: f64, length: f64) -> Vec3 {
    let dir = unit_az(scene.tx.azimuth + dod);
    let origin = flat(scene.tx.position);
    let r = bisect(0.1, 500.0, |r| reflected_length(scene, origin + dir * r) >= length);
    origin + dir * r
}

fn path_of(scene: &Scene, source: PathSource, t: f64) -> Result<PathTruth> {
    enumerate_paths(scene, t, 1)?
        .into_iter()
        .find(|p| p.source == source)
        .ok_or_else(|| invalid("preset", format!("{source:?} produces no path")))
}

/// Reflection loss that puts facet `i`'s best-pair power `rel_db` relative to the reference power.
fn calibrate_facet(scene: &mut Scene, i: usize, reference: f64, rel_db: f64, arrays: &ArraySetup) -> Result<()> {
    scene.facets[i].reflection_loss_db = 0.0;
    let raw = best_pair_power(&path_of(scene, PathSource::Facet(i), 0.0)?, arrays);
    let loss = lin_to_db(raw / reference) - rel_db;
    if loss < 0.0 {
        return Err(invalid("preset", format!("facet {i} cannot reach {rel_db} dB ({loss:.2} dB gain needed)")));
    }
    scene.facets[i].reflection_loss_db = loss;
    Ok(())
}

fn bus(profile: Vec<MaterialSpan>, waypoints: Vec<Waypoint>) -> Mover {
    Mover {
        id: "bus".into(),
        size: [12.0, 2.5, 3.2],
        profile,
        waypoints,
        reflection: None,
    }
}

fn waypoint(t: f64, x: f64, y: f64) -> Waypoint {
    Waypoint {
        t,
        position: Vec3::new(x, y, 0.0),
    }
}

fn all_metal() -> Vec<MaterialSpan> {
    vec![MaterialSpan {
        fraction: 1.0,
        material: Material::Metal,
    }]
}

/// Front position (x) at which a +x bus in lane `lane_y` starts blocking `source`.
fn blocking_front(scene: &Scene, lane_y: f64, source: PathSource, lo: f64, hi: f64) -> Result<f64> {
    let probe = |front: f64| {
        let mut s = scene.clone();
        s.movers = vec![bus(all_metal(), vec![waypoint(0.0, front - 6.0, lane_y)])];
        path_of(&s, source, 0.0).map(|p| p.blocked()).unwrap_or(false)
    };
    if probe(lo) || !probe(hi) {
        return Err(invalid("preset", format!("{source:?} is not crossed by the lane at y = {lane_y}")));
    }
    Ok(bisect(lo, hi, probe))
}

const LOS_LENGTH: f64 = 51.0;
const REFLECTION_LENGTH: f64 = 57.75;
/// Margin past the first blocking front position, so onsets are unambiguous.
const ONSET_MARGIN: f64 = 0.3;

fn case1(duration: f64, arrays: &ArraySetup, bursts: usize) -> Result<(Scene, usize)> {
    let (h_tx, h_rx) = (2.5f64, 1.8f64);
    let horizontal = (LOS_LENGTH.powi(2) - (h_tx - h_rx).powi(2)).sqrt();
    let rx_x = (horizontal.powi(2) - 400.0).sqrt();
    let los_az = (-20.0f64).atan2(rx_x).to_degrees();
    // LOS lands between beams at DoD -17°, DoA -22°.
    let tx = Pose::new(0.0, 0.0, h_tx, los_az + 17.0)?;
    let rx = Pose::new(rx_x, -20.0, h_rx, wrap_deg(los_az + 180.0 + 22.0))?;
    let mut scene = Scene::new(tx, rx, duration);
    scene.materials = MaterialTable {
        metal: 20.0,
        ..MaterialTable::default()
    };

    let main = reflection_point(&scene, 37.0, REFLECTION_LENGTH);
    scene.facets = vec![
        specular_facet(&scene, main, 6.0),
        specular_facet(&scene, Vec3::new(24.0, -36.0, 0.0), 4.0),
        specular_facet(&scene, Vec3::new(27.0, -40.0, 0.0), 4.0),
    ];
    let los = best_pair_power(&path_of(&scene, PathSource::Los, 0.0)?, arrays);
    calibrate_facet(&mut scene, 0, los, -9.0, arrays)?;
    calibrate_facet(&mut scene, 1, los, lin_to_db(0.009), arrays)?;
    calibrate_facet(&mut scene, 2, los, lin_to_db(0.008), arrays)?;

    let lane = -14.75;
    let (start, stop) = (24.0, 46.5);
    let los_front = blocking_front(&scene, lane, PathSource::Los, start, stop)?;
    let refl_front = blocking_front(&scene, lane, PathSource::Facet(0), start, stop)?;
    let at = |twelfths: f64| duration * twelfths / 12.0;
    scene.movers = vec![bus(
        all_metal(),
        vec![
            waypoint(0.0, start - 6.0, lane),
            waypoint(at(5.0), los_front + ONSET_MARGIN - 6.0, lane),
            waypoint(at(8.2), refl_front + ONSET_MARGIN - 6.0, lane),
            waypoint(at(11.0), stop - 6.0, lane),
            waypoint(duration, stop - 6.0 + 1e-9, lane),
        ],
    )];
    Ok((scene, (bursts as f64 * 2.0 / 12.0).ceil() as usize))
}

const CASE2_STATIC_DB: f64 = -115.0;

fn side_mover(id: &str, size: [f64; 3], material: Material, loss_db: f64, waypoints: Vec<Waypoint>) -> Mover {
    Mover {
        id: id.into(),
        size,
        profile: vec![MaterialSpan { fraction: 1.0, material }],
        waypoints,
        reflection: Some(MoverReflection {
            face: Face::Side,
            loss_db,
        }),
    }
}

/// Straight run along x at `speed`, optionally parked until `depart`, truncated at `end`.
fn lane_run(y: f64, x0: f64, speed: f64, depart: f64, end: f64) -> Vec<Waypoint> {
    let mut w = vec![waypoint(0.0, x0, y)];
    if depart > 0.0 {
        w.push(waypoint(depart, x0, y));
    }
    w.push(waypoint(depart + 12.0, x0 + speed * 12.0, y));
    if end > depart + 12.0 {
        w.push(waypoint(end, x0 + speed * 12.0 + 1e-9, y));
    }
    w
}

fn calibrate_mover(scene: &mut Scene, i: usize, peak_db: f64, arrays: &ArraySetup) -> Result<()> {
    let mut peak = 0.0f64;
    for k in 0..=200 {
        if let Ok(p) = path_of(scene, PathSource::Mover(i), k as f64 * 0.06) {
            peak = peak.max(best_pair_power(&p, arrays));
        }
    }
    if peak <= 0.0 {
        return Err(invalid("preset", format!("mover {i} never reflects")));
    }
    if let Some(r) = scene.movers[i].reflection.as_mut() {
        r.loss_db = (lin_to_db(peak) - peak_db).max(0.0);
    }
    Ok(())
}

fn case2(duration: f64, arrays: &ArraySetup, bursts: usize) -> Result<(Scene, usize)> {
    let tx = Pose::new(0.0, 0.0, 4.5, 180.0)?;
    let rx = Pose::new(0.0, 6.0, 1.8, 180.0)?;
    let mut scene = Scene::new(tx, rx, duration);
    // Side-by-side ends looking the same way: no usable direct coupling.
    scene.los = false;
    scene.facets = vec![ReflectorFacet::vertical(Vec3::new(-34.3, 3.0, 0.0), 0.0, 10.0, 30.0, 0.0)];
    let raw = best_pair_power(&path_of(&scene, PathSource::Facet(0), 0.0)?, arrays);
    scene.facets[0].reflection_loss_db = lin_to_db(raw) - CASE2_STATIC_DB;

    let end = duration.max(18.0);
    scene.movers = vec![
        side_mover("car1", [4.5, 1.8, 1.5], Material::Metal, 0.0, lane_run(17.0, -60.0, 5.0, 0.0, end)),
        side_mover("ped1", [0.5, 0.5, 1.7], Material::Body, 0.0, lane_run(10.5, -35.0, 1.5, 0.0, end)),
        side_mover("car2", [4.5, 1.8, 1.5], Material::Metal, 0.0, lane_run(13.5, -20.0, -6.0, 6.0, end)),
        side_mover("ped2", [0.5, 0.5, 1.7], Material::Body, 0.0, lane_run(19.5, -16.0, -1.4, 6.0, end)),
    ];
    // peak best-pair level of each mover over the 12 s street sequence, relative to the static pair
    for (i, peak_rel_db) in [4.0, -4.0, -2.0, -6.0].into_iter().enumerate() {
        calibrate_mover(&mut scene, i, CASE2_STATIC_DB + peak_rel_db, arrays)?;
    }
    Ok((scene, (bursts / 10).max(1)))
}

fn case3(duration: f64, arrays: &ArraySetup, bursts: usize) -> Result<(Scene, usize)> {
    let (txp, rxp) = (Vec3::new(0.0, 0.0, 3.5), Vec3::new(5.0, -20.0, 1.8));
    let los_az = az_of(rxp - txp);
    // LOS 3° off boresight at both ends, so a single beam pair is best.
    let tx = Pose::new(txp.x, txp.y, txp.z, los_az + 3.0)?;
    let rx = Pose::new(rxp.x, rxp.y, rxp.z, wrap_deg(los_az + 180.0 - 3.0))?;
    let mut scene = Scene::new(tx, rx, duration);
    let los_length = (rxp - txp).norm();
    let refl = reflection_point(&scene, 30.0, los_length + 6.8);
    scene.facets = vec![specular_facet(&scene, refl, 4.0)];
    let los = best_pair_power(&path_of(&scene, PathSource::Los, 0.0)?, arrays);
    calibrate_facet(&mut scene, 0, los, -10.0, arrays)?;

    let lane = -14.0;
    let speed = 6.3;
    let front = blocking_front(&scene, lane, PathSource::Los, -20.0, 8.0)?;
    // 6 s into a full campaign; early enough in short runs for the whole pass to fit
    let onset = (0.25 * duration).max(duration - 2.6).min(6.0);
    let x0 = front - speed * onset - 6.0;
    let profile = vec![
        MaterialSpan { fraction: 2.0 / 12.0, material: Material::Metal },
        MaterialSpan { fraction: 8.0 / 12.0, material: Material::Glass },
        MaterialSpan { fraction: 2.0 / 12.0, material: Material::Metal },
    ];
    scene.movers = vec![bus(
        profile,
        vec![waypoint(0.0, x0, lane), waypoint(duration, x0 + speed * duration, lane)],
    )];
    let idle = ((onset / 0.06).floor() as usize).saturating_sub(1).clamp(1, bursts);
    Ok((scene, idle))
}
