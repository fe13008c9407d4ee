use std::f64::consts::PI;

use super::blockage::{blockage_loss, Blockage, Segment};
use super::doppler::doppler_of_path;
use super::{scene_at, Face, MoverState, Pose, ReflectorFacet, Scene, Vec3};
use crate::error::{invalid, Result};
use crate::units::{wavelength, SPEED_OF_LIGHT};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Los,
    Reflection,
}

/// What produced a path; stable across time, so it keys the static phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathSource {
    Los,
    Facet(usize),
    Mover(usize),
}

impl PathSource {
    fn key(self) -> u64 {
        match self {
            PathSource::Los => 1,
            PathSource::Facet(i) => 0x1_0000 + i as u64,
            PathSource::Mover(i) => 0x2_0000 + i as u64,
        }
    }
}

/// One propagation path at an instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTruth {
    pub source: PathSource,
    pub kind: PathKind,
    /// Seconds.
    pub delay: f64,
    /// Metres.
    pub length: f64,
    pub dod_az: f64,
    pub dod_el: f64,
    pub doa_az: f64,
    pub doa_el: f64,
    /// Complex channel amplitude at time `epoch` (isotropic antennas).
    pub amplitude: C64,
    pub doppler: f64,
    pub blockage: Blockage,
    /// Time at which geometry and `amplitude` were evaluated.
    pub epoch: f64,
}

impl PathTruth {
    /// Synthetic path, e.g. for tests: amplitude given in linear volts at `epoch = 0`.
    pub fn synthetic(delay: f64, dod_az: f64, doa_az: f64, amplitude: C64, doppler: f64) -> Self {
        Self {
            source: PathSource::Los,
            kind: PathKind::Los,
            delay,
            length: delay * SPEED_OF_LIGHT,
            dod_az,
            dod_el: 0.0,
            doa_az,
            doa_el: 0.0,
            amplitude,
            doppler,
            blockage: Blockage::default(),
            epoch: 0.0,
        }
    }

    pub fn blocked(&self) -> bool {
        self.blockage.blocked()
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Uniform `[0, 2π)` phase, fixed per (seed, path source).
fn static_phase(seed: u64, source: PathSource) -> f64 {
    let bits = splitmix(splitmix(seed) ^ source.key());
    (bits >> 11) as f64 / (1u64 << 53) as f64 * 2.0 * PI
}

/// Specular point of a facet for the TX→RX pair, by the image method.
pub(crate) fn facet_specular_point(facet: &ReflectorFacet, tx: &Vec3, rx: &Vec3) -> Option<Vec3> {
    let n = facet.normal();
    let origin = facet.vertices[0];
    let dt = n.dot(&(tx - origin));
    let dr = n.dot(&(rx - origin));
    if dt * dr <= 0.0 {
        return None;
    }
    let image = tx - n * (2.0 * dt);
    // image sits at -dt, rx at +dr: the crossing is at dt / (dt + dr)
    let s = dt / (dt + dr);
    let p = image + (rx - image) * s;
    let inside = (0..4).all(|i| {
        let a = facet.vertices[i];
        let b = facet.vertices[(i + 1) % 4];
        (b - a).cross(&(p - a)).dot(&n) >= -1e-9
    });
    inside.then_some(p)
}

/// Reflection point on a mover's reflecting face: the face centre, if the face
/// looks at both link ends.
pub(crate) fn mover_reflection_point(scene: &Scene, state: &MoverState, face: Face) -> Option<Vec3> {
    let mover = &scene.movers[state.index];
    let (u, v, _) = state.axes();
    let [len, width, height] = mover.size;
    let (tx, rx) = (scene.tx.position, scene.rx.position);
    let centre = Vec3::new(state.position.x, state.position.y, height / 2.0);
    let normal = match face {
        Face::Front => u,
        Face::Back => -u,
        Face::Side => {
            let mid = (tx + rx) / 2.0 - centre;
            if mid.dot(&v) >= 0.0 {
                v
            } else {
                -v
            }
        }
    };
    let half = match face {
        Face::Side => width / 2.0,
        _ => len / 2.0,
    };
    let p = centre + normal * half;
    ((tx - p).dot(&normal) > 0.0 && (rx - p).dot(&normal) > 0.0).then_some(p)
}

struct PathBuilder<'a> {
    scene: &'a Scene,
    states: &'a [MoverState],
    lambda: f64,
    t: f64,
}

impl PathBuilder<'_> {
    fn legs_blockage(&self, points: &[Vec3], exclude: Option<usize>) -> Blockage {
        points
            .windows(2)
            .map(|p| {
                blockage_loss(
                    &Segment::new(p[0], p[1]),
                    &self.scene.movers,
                    self.states,
                    &self.scene.materials,
                    exclude,
                )
            })
            .fold(Blockage::default(), Blockage::combine)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        &self,
        source: PathSource,
        kind: PathKind,
        points: &[Vec3],
        velocities: &[Vec3],
        extra_loss_db: f64,
        exclude: Option<usize>,
        reference_length: f64,
    ) -> PathTruth {
        let tx: &Pose = &self.scene.tx;
        let rx: &Pose = &self.scene.rx;
        let length: f64 = points.windows(2).map(|p| (p[1] - p[0]).norm()).sum();
        let (dod_az, dod_el) = tx.relative_direction(&points[1]);
        let (doa_az, doa_el) = rx.relative_direction(&points[points.len() - 2]);
        let blockage = self.legs_blockage(points, exclude);
        let magnitude = self.lambda / (4.0 * PI * length)
            * 10f64.powf(-(extra_loss_db + blockage.loss_db) / 20.0);
        let phase = static_phase(self.scene.phase_seed, source)
            - 2.0 * PI * (length - reference_length) / self.lambda;
        PathTruth {
            source,
            kind,
            delay: length / SPEED_OF_LIGHT,
            length,
            dod_az,
            dod_el,
            doa_az,
            doa_el,
            amplitude: C64::from_polar(magnitude, phase),
            doppler: doppler_of_path(points, velocities, self.lambda),
            blockage,
            epoch: self.t,
        }
    }
}

/// Ground-truth paths at `t`: LOS plus (for `max_order = 1`) one image-method
/// reflection per facet with a valid specular point and one per reflecting
/// mover. Sorted by delay.
pub fn enumerate_paths(scene: &Scene, t: f64, max_order: u32) -> Result<Vec<PathTruth>> {
    if max_order > 1 {
        return Err(invalid("reflection order", format!("{max_order} (only 0 or 1 supported)")));
    }
    let states = scene_at(scene, t);
    let builder = PathBuilder {
        scene,
        states: &states,
        lambda: wavelength(scene.carrier_hz),
        t,
    };
    let tx = scene.tx.position;
    let rx = scene.rx.position;
    let still = Vec3::zeros();
    let los_len = (rx - tx).norm();

    let mut paths = Vec::new();
    if scene.los {
        paths.push(builder.build(
            PathSource::Los,
            PathKind::Los,
            &[tx, rx],
            &[still, still],
            0.0,
            None,
            los_len,
        ));
    }

    if max_order == 1 {
        for (i, facet) in scene.facets.iter().enumerate() {
            if let Some(p) = facet_specular_point(facet, &tx, &rx) {
                let len = (p - tx).norm() + (rx - p).norm();
                paths.push(builder.build(
                    PathSource::Facet(i),
                    PathKind::Reflection,
                    &[tx, p, rx],
                    &[still; 3],
                    facet.reflection_loss_db,
                    None,
                    len,
                ));
            }
        }
        let initial = scene_at(scene, 0.0);
        for state in &states {
            let Some(refl) = scene.movers[state.index].reflection else {
                continue;
            };
            let Some(p) = mover_reflection_point(scene, state, refl.face) else {
                continue;
            };
            // carrier phase advances with path length relative to t = 0
            let reference = {
                let s0 = &initial[state.index];
                let offset = p - state.position;
                let (u, v, _) = state.axes();
                let (u0, v0, _) = s0.axes();
                let local = Vec3::new(offset.dot(&u), offset.dot(&v), offset.z);
                let p0 = s0.position + u0 * local.x + v0 * local.y + Vec3::new(0.0, 0.0, local.z);
                (p0 - tx).norm() + (rx - p0).norm()
            };
            paths.push(builder.build(
                PathSource::Mover(state.index),
                PathKind::Reflection,
                &[tx, p, rx],
                &[still, state.velocity, still],
                refl.loss_db,
                Some(state.index),
                reference,
            ));
        }
    }

    paths.sort_by(|a, b| a.delay.total_cmp(&b.delay).then(a.source.cmp(&b.source)));
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Material, MaterialSpan, Mover, MoverReflection, Waypoint};
    use proptest::prelude::*;

    fn link(distance: f64) -> Scene {
        Scene::new(
            Pose::new(0.0, 0.0, 2.0, 0.0).unwrap(),
            Pose::new(distance, 0.0, 2.0, 180.0).unwrap(),
            10.0,
        )
    }

    #[test]
    fn los_only_delay() {
        let paths = enumerate_paths(&link(51.0), 0.0, 1).unwrap();
        assert_eq!(paths.len(), 1);
        assert!((paths[0].delay - 170.12e-9).abs() < 0.01e-9);
        assert_eq!(paths[0].dod_az, 0.0);
        assert_eq!(paths[0].doa_az, 0.0);
        let expected = wavelength(scene_carrier()) / (4.0 * PI * 51.0);
        assert!((paths[0].amplitude.norm() - expected).abs() < 1e-15);
    }

    fn scene_carrier() -> f64 {
        crate::units::CENTER_FREQUENCY_HZ
    }

    #[test]
    fn order_zero_drops_reflections() {
        let mut s = link(30.0);
        s.facets.push(ReflectorFacet::vertical(Vec3::new(15.0, 10.0, 0.0), -90.0, 20.0, 10.0, 6.0));
        assert_eq!(enumerate_paths(&s, 0.0, 1).unwrap().len(), 2);
        assert_eq!(enumerate_paths(&s, 0.0, 0).unwrap().len(), 1);
        assert!(enumerate_paths(&s, 0.0, 2).is_err());
    }

    #[test]
    fn wall_reflection_geometry() {
        let mut s = link(30.0);
        s.facets.push(ReflectorFacet::vertical(Vec3::new(15.0, 10.0, 0.0), -90.0, 20.0, 10.0, 6.0));
        let paths = enumerate_paths(&s, 0.0, 1).unwrap();
        let r = &paths[1];
        let expected = 2.0 * (15f64.powi(2) + 100.0).sqrt();
        assert!((r.length - expected).abs() < 1e-9);
        assert!((r.dod_az - 33.690067525979785).abs() < 1e-9);
        assert!((r.doa_az + 33.690067525979785).abs() < 1e-9);
        let free = wavelength(scene_carrier()) / (4.0 * PI * expected);
        assert!((r.amplitude.norm() / free - 10f64.powf(-6.0 / 20.0)).abs() < 1e-12);
    }

    #[test]
    fn specular_point_must_be_on_facet() {
        let mut s = link(30.0);
        // narrow facet far from the specular point
        s.facets.push(ReflectorFacet::vertical(Vec3::new(2.0, 10.0, 0.0), -90.0, 2.0, 10.0, 6.0));
        assert_eq!(enumerate_paths(&s, 0.0, 1).unwrap().len(), 1);
    }

    #[test]
    fn approaching_mover_reflection_has_positive_doppler() {
        let mut s = link(4.0);
        s.tx.azimuth = 180.0;
        s.movers.push(Mover {
            id: "car".into(),
            size: [4.5, 1.8, 1.5],
            profile: vec![MaterialSpan { fraction: 1.0, material: Material::Metal }],
            waypoints: vec![
                Waypoint { t: 0.0, position: Vec3::new(-60.0, 0.0, 0.0) },
                Waypoint { t: 10.0, position: Vec3::new(-10.0, 0.0, 0.0) },
            ],
            reflection: Some(MoverReflection { face: Face::Front, loss_db: 10.0 }),
        });
        let paths = enumerate_paths(&s, 5.0, 1).unwrap();
        let r = paths.iter().find(|p| p.source == PathSource::Mover(0)).unwrap();
        assert!(r.doppler > 0.0);
        // both legs shrink at about 5 m/s
        let lambda = wavelength(scene_carrier());
        assert!((r.doppler - 2.0 * 5.0 / lambda).abs() < 5.0, "{}", r.doppler);
        // mover does not block its own reflection
        assert!(!r.blocked());
    }

    #[test]
    fn static_phase_is_seeded() {
        let a = enumerate_paths(&link(20.0).with_phase_seed(1), 0.0, 0).unwrap();
        let b = enumerate_paths(&link(20.0).with_phase_seed(1), 3.0, 0).unwrap();
        let c = enumerate_paths(&link(20.0).with_phase_seed(2), 0.0, 0).unwrap();
        assert_eq!(a[0].amplitude, b[0].amplitude);
        assert_ne!(a[0].amplitude, c[0].amplitude);
    }

    proptest! {
        #[test]
        fn delays_match_geometry(
            tx in proptest::array::uniform2(-50.0f64..50.0),
            rx in proptest::array::uniform2(-50.0f64..50.0),
            wall_y in 20.0f64..60.0,
            h in proptest::array::uniform2(1.0f64..5.0),
        ) {
            let mut s = Scene::new(
                Pose::new(tx[0], tx[1] * 0.3, h[0], 0.0).unwrap(),
                Pose::new(rx[0], rx[1] * 0.3, h[1], 0.0).unwrap(),
                1.0,
            );
            s.facets.push(ReflectorFacet::vertical(Vec3::new(0.0, wall_y, 0.0), -90.0, 400.0, 50.0, 3.0));
            let paths = enumerate_paths(&s, 0.0, 1).unwrap();
            let direct = (s.rx.position - s.tx.position).norm();
            prop_assert!((paths[0].delay - direct / SPEED_OF_LIGHT).abs() < 1e-12);
            prop_assert_eq!(paths.len(), 2);
            // image method: delay equals the summed leg lengths over c, and the
            // reflection point satisfies equal incidence/reflection angles
            let image = Vec3::new(s.tx.position.x, 2.0 * wall_y - s.tx.position.y, s.tx.position.z);
            let via_image = (s.rx.position - image).norm();
            prop_assert!((paths[1].delay - via_image / SPEED_OF_LIGHT).abs() < 1e-12);
            let p = facet_specular_point(&s.facets[0], &s.tx.position, &s.rx.position).unwrap();
            let legs = (p - s.tx.position).norm() + (s.rx.position - p).norm();
            prop_assert!((legs - via_image).abs() < 1e-9);
            let n = s.facets[0].normal();
            let inc = (s.tx.position - p).normalize().dot(&n).abs();
            let out = (s.rx.position - p).normalize().dot(&n).abs();
            prop_assert!((inc - out).abs() < 1e-9);
        }
    }
}
