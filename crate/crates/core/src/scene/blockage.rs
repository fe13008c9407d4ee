use super::{MaterialTable, Mover, MoverState, Vec3};

/// Straight propagation leg between two points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec3,
    pub b: Vec3,
}

impl Segment {
    pub fn new(a: Vec3, b: Vec3) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Blockage {
    pub loss_db: f64,
    pub blockers: usize,
}

impl Blockage {
    pub fn blocked(&self) -> bool {
        self.blockers > 0
    }

    pub fn combine(self, other: Blockage) -> Blockage {
        Blockage {
            loss_db: self.loss_db + other.loss_db,
            blockers: self.blockers + other.blockers,
        }
    }
}

/// Parameter interval `[t0, t1] ⊂ [0, 1]` where the segment is inside the
/// mover's box, or `None`. Slab test in the box frame.
pub fn segment_box_hit(seg: &Segment, mover: &Mover, state: &MoverState) -> Option<(f64, f64)> {
    let p = state.to_local(&seg.a);
    let q = state.to_local(&seg.b);
    let d = q - p;
    let [len, width, height] = mover.size;
    let lo = [-len / 2.0, -width / 2.0, 0.0];
    let hi = [len / 2.0, width / 2.0, height];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for axis in 0..3 {
        if d[axis].abs() < 1e-15 {
            if p[axis] < lo[axis] || p[axis] > hi[axis] {
                return None;
            }
            continue;
        }
        let a = (lo[axis] - p[axis]) / d[axis];
        let b = (hi[axis] - p[axis]) / d[axis];
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
        if t0 > t1 {
            return None;
        }
    }
    // grazing contacts and endpoint touches carry no material
    (t1 - t0 > 1e-9).then_some((t0, t1))
}

/// Attenuation of the material hit by the in-box part of the segment; the
/// strongest attenuator wins when several spans are crossed.
fn material_loss(seg: &Segment, mover: &Mover, state: &MoverState, hit: (f64, f64), table: &MaterialTable) -> f64 {
    let len = mover.size[0];
    let front_fraction = |t: f64| {
        let x = state.to_local(&(seg.a + (seg.b - seg.a) * t)).x;
        ((len / 2.0 - x) / len).clamp(0.0, 1.0)
    };
    let (f0, f1) = (front_fraction(hit.0), front_fraction(hit.1));
    let (lo, hi) = (f0.min(f1), f0.max(f1));
    let edges = mover.span_edges();
    mover
        .profile
        .iter()
        .enumerate()
        .filter(|(i, _)| edges[*i] <= hi && edges[i + 1] >= lo)
        .map(|(_, s)| table.attenuation(s.material))
        .fold(0.0, f64::max)
}

/// Total excess loss on `seg` from all movers except `exclude`.
pub fn blockage_loss(
    seg: &Segment,
    movers: &[Mover],
    states: &[MoverState],
    table: &MaterialTable,
    exclude: Option<usize>,
) -> Blockage {
    states
        .iter()
        .filter(|s| Some(s.index) != exclude)
        .filter_map(|s| {
            let mover = &movers[s.index];
            segment_box_hit(seg, mover, s).map(|hit| material_loss(seg, mover, s, hit, table))
        })
        .fold(Blockage::default(), |acc, loss| {
            acc.combine(Blockage {
                loss_db: loss,
                blockers: 1,
            })
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{scene_at, Material, MaterialSpan, Scene, Pose, Waypoint};
    use proptest::prelude::*;

    fn mover_at(x: f64, y: f64, size: [f64; 3], profile: Vec<(f64, Material)>) -> Mover {
        Mover {
            id: format!("m{x}"),
            size,
            profile: profile
                .into_iter()
                .map(|(fraction, material)| MaterialSpan { fraction, material })
                .collect(),
            waypoints: vec![
                Waypoint { t: 0.0, position: Vec3::new(x, y, 0.0) },
                Waypoint { t: 1.0, position: Vec3::new(x + 1.0, y, 0.0) },
            ],
            reflection: None,
        }
    }

    fn bus(x: f64) -> Mover {
        mover_at(
            x,
            0.0,
            [12.0, 2.5, 3.2],
            vec![(0.2, Material::Metal), (0.6, Material::Glass), (0.2, Material::Metal)],
        )
    }

    fn scene_with(movers: Vec<Mover>) -> Scene {
        let mut s = Scene::new(
            Pose::new(0.0, -10.0, 2.0, 90.0).unwrap(),
            Pose::new(0.0, 10.0, 2.0, -90.0).unwrap(),
            1.0,
        );
        s.movers = movers;
        s
    }

    fn link_loss(scene: &Scene) -> Blockage {
        let states = scene_at(scene, 0.0);
        let seg = Segment::new(scene.tx.position, scene.rx.position);
        blockage_loss(&seg, &scene.movers, &states, &scene.materials, None)
    }

    #[test]
    fn no_movers_no_loss() {
        let b = link_loss(&scene_with(vec![]));
        assert_eq!(b.loss_db, 0.0);
        assert!(!b.blocked());
    }

    #[test]
    fn metal_front_of_bus() {
        // bus centre at x = -5: the link at x = 0 crosses 1 m behind its front
        let b = link_loss(&scene_with(vec![bus(-5.0)]));
        assert_eq!(b.loss_db, 24.0);
        let b = link_loss(&scene_with(vec![bus(0.0)]));
        assert_eq!(b.loss_db, 10.0);
        let b = link_loss(&scene_with(vec![bus(5.0)]));
        assert_eq!(b.loss_db, 24.0);
        let b = link_loss(&scene_with(vec![bus(7.0)]));
        assert!(!b.blocked());
    }

    #[test]
    fn two_pedestrians_add() {
        let ped = |y| mover_at(0.0, y, [0.5, 0.5, 1.8], vec![(1.0, Material::Body)]);
        let mut scene = scene_with(vec![ped(-3.0), ped(3.0)]);
        // link above head height would miss; lower both ends
        scene.tx.position.z = 1.5;
        scene.rx.position.z = 1.5;
        let b = link_loss(&scene);
        assert_eq!(b.blockers, 2);
        assert_eq!(b.loss_db, 20.0);
    }

    #[test]
    fn passes_over_short_box() {
        let car = mover_at(0.0, 0.0, [4.5, 1.8, 1.5], vec![(1.0, Material::Metal)]);
        assert!(!link_loss(&scene_with(vec![car])).blocked());
    }

    proptest! {
        #[test]
        fn loss_monotone_in_blockers(xs in proptest::collection::vec(-3.0f64..3.0, 1..5)) {
            let peds: Vec<Mover> = xs
                .iter()
                .enumerate()
                .map(|(i, x)| mover_at(*x * 0.1, -8.0 + 3.0 * i as f64, [0.5, 0.5, 2.5], vec![(1.0, Material::Body)]))
                .collect();
            let mut prev = 0.0;
            for k in 0..=peds.len() {
                let b = link_loss(&scene_with(peds[..k].to_vec()));
                prop_assert!(b.loss_db >= prev);
                prev = b.loss_db;
            }
        }
    }
}
