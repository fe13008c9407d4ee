//! Dynamic street geometry and the ground-truth multipath it produces.
//!
//! A [`Scene`] holds the TX/RX poses, static reflecting facets and a set of
//! [`Mover`]s (buses, cars, pedestrians) that follow piecewise-linear
//! trajectories. Movers block the paths they intersect with a
//! material-dependent flat attenuation, and can optionally act as moving
//! reflectors. Everything is a pure function of `(scene, t)`.

mod blockage;
mod doppler;
mod paths;

use serde::{Deserialize, Serialize};

pub use blockage::{blockage_loss, segment_box_hit, Blockage, Segment};
pub use doppler::doppler_of_path;
pub use paths::{enumerate_paths, PathKind, PathSource, PathTruth};

use crate::error::{invalid, Result};
use crate::units::{wrap_deg, CENTER_FREQUENCY_HZ};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Antenna phase centre and boresight. `position.z` is the antenna height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    /// Boresight azimuth in the scene frame, degrees, counter-clockwise from +x.
    pub azimuth: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, height: f64, azimuth: f64) -> Result<Self> {
        let pose = Self {
            position: Vec3::new(x, y, height),
            azimuth: wrap_deg(azimuth),
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn height(&self) -> f64 {
        self.position.z
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.position.z > 0.0) {
            return Err(invalid("pose", format!("height {} must be positive", self.position.z)));
        }
        if !(-180.0..180.0).contains(&self.azimuth) {
            return Err(invalid("pose", format!("azimuth {} outside [-180, 180)", self.azimuth)));
        }
        Ok(())
    }

    /// Azimuth/elevation of `target` relative to this pose's boresight, degrees.
    pub fn relative_direction(&self, target: &Vec3) -> (f64, f64) {
        let d = target - self.position;
        let az = d.y.atan2(d.x).to_degrees();
        let el = d.z.atan2(d.x.hypot(d.y)).to_degrees();
        (wrap_deg(az - self.azimuth), el)
    }
}

/// Planar quadrilateral reflector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectorFacet {
    pub vertices: [Vec3; 4],
    pub reflection_loss_db: f64,
}

impl ReflectorFacet {
    /// Vertical rectangle centred on `center` (ground-level x, y), facing `normal_az` degrees.
    pub fn vertical(center: Vec3, normal_az: f64, width: f64, height: f64, loss_db: f64) -> Self {
        let n = normal_az.to_radians();
        let along = Vec3::new(-n.sin(), n.cos(), 0.0) * (width / 2.0);
        let base = Vec3::new(center.x, center.y, 0.0);
        let up = Vec3::new(0.0, 0.0, height);
        Self {
            vertices: [base - along, base + along, base + along + up, base - along + up],
            reflection_loss_db: loss_db,
        }
    }

    pub fn normal(&self) -> Vec3 {
        let [a, b, _, d] = &self.vertices;
        (b - a).cross(&(d - a)).normalize()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reflection_loss_db >= 0.0) {
            return Err(invalid("facet", "reflection loss must be >= 0 dB"));
        }
        let [a, b, c, d] = &self.vertices;
        let n = (b - a).cross(&(d - a));
        if n.norm() < 1e-9 {
            return Err(invalid("facet", "degenerate vertices"));
        }
        let off = n.normalize().dot(&(c - a)).abs();
        if off > 1e-3 {
            return Err(invalid("facet", format!("vertices not coplanar ({off:.4} m)")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Material {
    Metal,
    Glass,
    Body,
}

/// Penetration loss per material, dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialTable {
    pub metal: f64,
    pub glass: f64,
    pub body: f64,
}

impl Default for MaterialTable {
    fn default() -> Self {
        Self {
            metal: 24.0,
            glass: 10.0,
            body: 10.0,
        }
    }
}

impl MaterialTable {
    pub fn attenuation(&self, m: Material) -> f64 {
        match m {
            Material::Metal => self.metal,
            Material::Glass => self.glass,
            Material::Body => self.body,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.metal, self.glass, self.body].iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("material table", "attenuations must be >= 0 dB"));
        }
        Ok(())
    }
}

/// A longitudinal slice of a mover, measured from its front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpan {
    pub fraction: f64,
    pub material: Material,
}

/// Which face of a mover reflects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Face {
    /// The long side facing the link (the largest face of a vehicle).
    Side,
    Front,
    Back,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoverReflection {
    pub face: Face,
    pub loss_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub t: f64,
    /// Ground position of the box centre (z ignored).
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mover {
    pub id: String,
    /// Length (along heading), width, height, metres.
    pub size: [f64; 3],
    pub profile: Vec<MaterialSpan>,
    pub waypoints: Vec<Waypoint>,
    pub reflection: Option<MoverReflection>,
}

impl Mover {
    pub fn validate(&self) -> Result<()> {
        if self.size.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("mover", format!("{}: box sizes must be positive", self.id)));
        }
        if self.waypoints.is_empty() {
            return Err(invalid("mover", format!("{}: no waypoints", self.id)));
        }
        if self.waypoints.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(invalid(
                "mover",
                format!("{}: waypoint times must be strictly increasing", self.id),
            ));
        }
        if self.profile.is_empty() || self.profile.iter().any(|s| !(s.fraction > 0.0)) {
            return Err(invalid("mover", format!("{}: empty or non-positive material span", self.id)));
        }
        let total: f64 = self.profile.iter().map(|s| s.fraction).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(invalid(
                "mover",
                format!("{}: span fractions sum to {total}, not 1", self.id),
            ));
        }
        if let Some(r) = &self.reflection {
            if !(r.loss_db >= 0.0) {
                return Err(invalid("mover", format!("{}: reflection loss must be >= 0", self.id)));
            }
        }
        Ok(())
    }

    /// Position and velocity at `t`, clamped to the first/last waypoint.
    pub fn kinematics(&self, t: f64) -> (Vec3, Vec3) {
        let w = &self.waypoints;
        let first = &w[0];
        let last = &w[w.len() - 1];
        if t <= first.t {
            return (first.position, Vec3::zeros());
        }
        if t >= last.t {
            return (last.position, Vec3::zeros());
        }
        let i = w.partition_point(|p| p.t <= t) - 1;
        let (a, b) = (&w[i], &w[i + 1]);
        let vel = (b.position - a.position) / (b.t - a.t);
        (a.position + vel * (t - a.t), vel)
    }

    /// Unit horizontal heading at `t`: the current segment direction, or the
    /// closest moving segment while stationary.
    pub fn heading(&self, t: f64) -> Vec3 {
        let dirs: Vec<(f64, Vec3)> = self
            .waypoints
            .windows(2)
            .filter_map(|s| {
                let d = s[1].position - s[0].position;
                let d = Vec3::new(d.x, d.y, 0.0);
                (d.norm() > 1e-12).then(|| (s[0].t.max(t.min(s[1].t)), d.normalize()))
            })
            .collect();
        dirs.iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|d| d.1)
            .unwrap_or_else(|| Vec3::new(1.0, 0.0, 0.0))
    }

    /// Cumulative span boundaries from the front: `[0, f1, f1+f2, ..., 1]`.
    pub fn span_edges(&self) -> Vec<f64> {
        let mut edges = vec![0.0];
        let mut acc = 0.0;
        for s in &self.profile {
            acc += s.fraction;
            edges.push(acc);
        }
        edges
    }
}

/// Instantaneous state of one mover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoverState {
    pub index: usize,
    pub position: Vec3,
    pub velocity: Vec3,
    pub heading: Vec3,
}

impl MoverState {
    /// Box frame: heading, lateral (left of heading), up.
    pub fn axes(&self) -> (Vec3, Vec3, Vec3) {
        let up = Vec3::z();
        (self.heading, up.cross(&self.heading), up)
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        let (u, v, w) = self.axes();
        let d = p - self.position;
        Vec3::new(d.dot(&u), d.dot(&v), d.dot(&w) + self.position.z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub tx: Pose,
    pub rx: Pose,
    pub facets: Vec<ReflectorFacet>,
    pub movers: Vec<Mover>,
    pub materials: MaterialTable,
    /// Scenario length, seconds.
    pub duration: f64,
    /// Seeds the static per-path phases.
    pub phase_seed: u64,
    pub carrier_hz: f64,
    /// Whether the direct path exists at all (false for obstructed links).
    pub los: bool,
}

impl Scene {
    pub fn new(tx: Pose, rx: Pose, duration: f64) -> Self {
        Self {
            tx,
            rx,
            facets: Vec::new(),
            movers: Vec::new(),
            materials: MaterialTable::default(),
            duration,
            phase_seed: 0,
            carrier_hz: CENTER_FREQUENCY_HZ,
            los: true,
        }
    }

    pub fn with_phase_seed(mut self, seed: u64) -> Self {
        self.phase_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.tx.validate()?;
        self.rx.validate()?;
        self.materials.validate()?;
        for f in &self.facets {
            f.validate()?;
        }
        for m in &self.movers {
            m.validate()?;
        }
        if !(self.duration > 0.0) {
            return Err(invalid("scene", "duration must be positive"));
        }
        Ok(())
    }
}

/// Poses and velocities of every mover at `t`.
pub fn scene_at(scene: &Scene, t: f64) -> Vec<MoverState> {
    scene
        .movers
        .iter()
        .enumerate()
        .map(|(index, m)| {
            let (position, velocity) = m.kinematics(t);
            MoverState {
                index,
                position,
                velocity,
                heading: m.heading(t),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walker(points: &[(f64, f64)]) -> Mover {
        Mover {
            id: "w".into(),
            size: [0.5, 0.5, 1.8],
            profile: vec![MaterialSpan {
                fraction: 1.0,
                material: Material::Body,
            }],
            waypoints: points
                .iter()
                .map(|&(t, x)| Waypoint {
                    t,
                    position: Vec3::new(x, 0.0, 0.0),
                })
                .collect(),
            reflection: None,
        }
    }

    #[test]
    fn interpolates_and_clamps() {
        let m = walker(&[(0.0, 0.0), (10.0, 20.0)]);
        let (p, v) = m.kinematics(5.0);
        assert!((p.x - 10.0).abs() < 1e-12);
        assert!((v.x - 2.0).abs() < 1e-12);
        let (p, v) = m.kinematics(-1.0);
        assert_eq!(p.x, 0.0);
        assert_eq!(v, Vec3::zeros());
        let (p, v) = m.kinematics(11.0);
        assert_eq!(p.x, 20.0);
        assert_eq!(v, Vec3::zeros());
    }

    #[test]
    fn heading_persists_when_stopped() {
        let m = walker(&[(0.0, 0.0), (10.0, -20.0), (12.0, -20.0)]);
        assert!((m.heading(11.0).x + 1.0).abs() < 1e-12);
        assert!((m.heading(-3.0).x + 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut m = walker(&[(0.0, 0.0), (0.0, 1.0)]);
        assert!(m.validate().is_err());
        m = walker(&[(0.0, 0.0), (1.0, 1.0)]);
        m.profile[0].fraction = 0.7;
        assert!(m.validate().is_err());
        assert!(Pose::new(0.0, 0.0, 0.0, 0.0).is_err());
        let mut f = ReflectorFacet::vertical(Vec3::zeros(), 0.0, 4.0, 3.0, 5.0);
        f.validate().unwrap();
        f.vertices[2].x += 0.01;
        assert!(f.validate().is_err());
    }

    #[test]
    fn relative_direction() {
        let pose = Pose::new(0.0, 0.0, 2.0, 90.0).unwrap();
        let (az, el) = pose.relative_direction(&Vec3::new(-1.0, 1.0, 2.0));
        assert!((az - 45.0).abs() < 1e-12);
        assert!(el.abs() < 1e-12);
    }
}
