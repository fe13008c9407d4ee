//! Scene and run-configuration files.
//!
//! Both are TOML documents that must start with `schema = 1`. Units are fixed
//! (metres, seconds, degrees, dB) and unknown keys are rejected. Errors carry
//! the file path and the line they refer to.
//!
//! Scene file:
//!
//! ```toml
//! schema = 1
//! duration = 12.0          # s
//! los = true               # optional
//!
//! [tx]
//! position = [0.0, 0.0]    # m, ground plane
//! height = 2.5
//! azimuth = -6.1           # boresight, deg CCW from +x
//!
//! [rx]
//! position = [46.9, -20.0]
//! height = 1.8
//! azimuth = 178.9
//!
//! [materials]              # optional penetration losses, dB
//! metal = 24.0
//! glass = 10.0
//! body = 10.0
//!
//! [[facets]]               # either four vertices ...
//! vertices = [[0, 9, 0], [20, 9, 0], [20, 9, 20], [0, 9, 20]]
//! reflection_loss_db = 6.0
//!
//! [[facets]]               # ... or a vertical rectangle
//! center = [11.4, 6.8]
//! normal_azimuth = -90.0
//! width = 10.0
//! height = 15.0
//! reflection_loss_db = 6.0
//!
//! [[movers]]
//! id = "bus"
//! size = [12.0, 2.5, 3.2]  # length, width, height
//! profile = [{ fraction = 0.2, material = "metal" }, { fraction = 0.8, material = "glass" }]
//! waypoints = [{ t = 0.0, position = [18.0, -14.75] }, { t = 12.0, position = [40.5, -14.75] }]
//! reflection = { face = "side", loss_db = 10.0 }   # optional
//! ```
//!
//! Config file: every key is optional and defaults to the standard sounder.
//!
//! ```toml
//! schema = 1
//! [sounder]
//! bursts = 200
//! eirp_dbm = 36.0
//! calibration = "ripple"   # or "identity"
//! [arrays]
//! tx_azimuths = [-45, -35, -25, -15, -5, 5, 15, 25, 35, 45]
//! [evaluation]
//! idle_bursts = 34
//! window = "blackman"      # "rectangular", "hann"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::array::{ArraySetup, BeamGrid, PatternShape};
use crate::error::{Error, Result};
use crate::evaluation::{DelayWindow, EvalConfig, ThresholdRule, TrackGates};
use crate::scene::{MaterialSpan, MaterialTable, Mover, MoverReflection, Pose, ReflectorFacet, Scene, Vec3, Waypoint};
use crate::sounder::SounderConfig;
use crate::waveform::CalibrationKind;

pub const SCHEMA_VERSION: u32 = 1;

fn yes() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    schema: u32,
    duration: f64,
    #[serde(default = "yes")]
    los: bool,
    tx: PoseFile,
    rx: PoseFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    materials: Option<MaterialTable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    facets: Vec<FacetFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    movers: Vec<MoverFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseFile {
    position: [f64; 2],
    height: f64,
    azimuth: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FacetFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertices: Option<[[f64; 3]; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normal_azimuth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<f64>,
    reflection_loss_db: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointFile {
    t: f64,
    position: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MoverFile {
    id: String,
    size: [f64; 3],
    profile: Vec<MaterialSpan>,
    waypoints: Vec<WaypointFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reflection: Option<MoverReflection>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SounderSection {
    tone_count: usize,
    tone_spacing_hz: f64,
    center_frequency_hz: f64,
    bandwidth_hz: f64,
    waveform_s: f64,
    guard_s: f64,
    snapshots_per_burst: usize,
    burst_period_s: f64,
    bursts: usize,
    eirp_dbm: f64,
    noise_figure_db: f64,
    calibration: CalibrationKind,
    calibration_seed: u64,
    noiseless: bool,
}

impl Default for SounderSection {
    fn default() -> Self {
        Self::from(&SounderConfig::default())
    }
}

impl From<&SounderConfig> for SounderSection {
    fn from(c: &SounderConfig) -> Self {
        Self {
            tone_count: c.tone_count,
            tone_spacing_hz: c.tone_spacing_hz,
            center_frequency_hz: c.center_frequency_hz,
            bandwidth_hz: c.bandwidth_hz,
            waveform_s: c.waveform_s,
            guard_s: c.guard_s,
            snapshots_per_burst: c.snapshots_per_burst,
            burst_period_s: c.burst_period_s,
            bursts: c.bursts,
            eirp_dbm: c.eirp_dbm,
            noise_figure_db: c.noise_figure_db,
            calibration: c.calibration,
            calibration_seed: c.calibration_seed,
            noiseless: c.noiseless,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PatternSection {
    beamwidth_az: f64,
    beamwidth_el: f64,
    gain_dbi: f64,
    sidelobe_db: f64,
}

impl From<&PatternShape> for PatternSection {
    fn from(p: &PatternShape) -> Self {
        Self {
            beamwidth_az: p.beamwidth_az,
            beamwidth_el: p.beamwidth_el,
            gain_dbi: p.gain_dbi,
            sidelobe_db: p.sidelobe_db,
        }
    }
}

impl Default for PatternSection {
    fn default() -> Self {
        Self::from(&PatternShape::default())
    }
}

impl PatternSection {
    fn shape(&self) -> PatternShape {
        PatternShape {
            beamwidth_az: self.beamwidth_az,
            beamwidth_el: self.beamwidth_el,
            gain_dbi: self.gain_dbi,
            sidelobe_db: self.sidelobe_db,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ArraysSection {
    tx_azimuths: Vec<f64>,
    tx_elevations: Vec<f64>,
    rx_azimuths: Vec<f64>,
    rx_elevations: Vec<f64>,
    tx_pattern: PatternSection,
    rx_pattern: PatternSection,
}

impl From<&ArraySetup> for ArraysSection {
    fn from(a: &ArraySetup) -> Self {
        Self {
            tx_azimuths: a.tx_grid.azimuths.clone(),
            tx_elevations: a.tx_grid.elevations.clone(),
            rx_azimuths: a.rx_grid.azimuths.clone(),
            rx_elevations: a.rx_grid.elevations.clone(),
            tx_pattern: (&a.tx_shape).into(),
            rx_pattern: (&a.rx_shape).into(),
        }
    }
}

impl Default for ArraysSection {
    fn default() -> Self {
        Self::from(&ArraySetup::default())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvaluationSection {
    window: DelayWindow,
    det_margin_db: f64,
    dynamic_range_db: f64,
    delay_spread_range_db: f64,
    noise_fraction: f64,
    ghost_margin_db: f64,
    idle_bursts: usize,
    hysteresis_db: f64,
    dwell_bursts: usize,
    track_delay_bins: f64,
    track_angle_deg: f64,
    track_max_miss: usize,
}

impl From<&EvalConfig> for EvaluationSection {
    fn from(e: &EvalConfig) -> Self {
        Self {
            window: e.window,
            det_margin_db: e.detection.margin_db,
            dynamic_range_db: e.detection.dynamic_range_db,
            delay_spread_range_db: e.delay_spread.dynamic_range_db,
            noise_fraction: e.noise_fraction,
            ghost_margin_db: e.ghost_margin_db,
            idle_bursts: e.idle_bursts,
            hysteresis_db: e.hysteresis_db,
            dwell_bursts: e.dwell_bursts,
            track_delay_bins: e.gates.delay_bins,
            track_angle_deg: e.gates.angle_deg,
            track_max_miss: e.gates.max_miss,
        }
    }
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self::from(&EvalConfig::default())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema: u32,
    #[serde(default)]
    sounder: SounderSection,
    #[serde(default)]
    arrays: ArraysSection,
    #[serde(default)]
    evaluation: EvaluationSection,
}

/// Sounder and evaluation settings from one config file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub sounder: SounderConfig,
    pub evaluation: EvalConfig,
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the `index`-th occurrence of a line starting with `prefix`.
fn line_of(text: &str, prefix: &str, index: usize) -> usize {
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim_start().starts_with(prefix))
        .nth(index)
        .map_or(1, |(i, _)| i + 1)
}

fn config_error(path: &Path, line: usize, message: impl std::fmt::Display) -> Error {
    Error::Config {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    }
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| line_at(text, s.start));
        config_error(path, line, e.message().trim())
    })
}

fn check_schema(schema: u32, text: &str, path: &Path) -> Result<()> {
    if schema != SCHEMA_VERSION {
        return Err(config_error(
            path,
            line_of(text, "schema", 0),
            format!("unsupported schema {schema} (expected {SCHEMA_VERSION})"),
        ));
    }
    Ok(())
}

fn pose(p: &PoseFile) -> Result<Pose> {
    Pose::new(p.position[0], p.position[1], p.height, p.azimuth)
}

fn facet(f: &FacetFile) -> std::result::Result<ReflectorFacet, String> {
    match (f.vertices, f.center, f.normal_azimuth, f.width, f.height) {
        (Some(v), None, None, None, None) => Ok(ReflectorFacet {
            vertices: v.map(|p| Vec3::new(p[0], p[1], p[2])),
            reflection_loss_db: f.reflection_loss_db,
        }),
        (None, Some(c), Some(n), Some(w), Some(h)) => Ok(ReflectorFacet::vertical(
            Vec3::new(c[0], c[1], 0.0),
            n,
            w,
            h,
            f.reflection_loss_db,
        )),
        _ => Err("a facet needs either `vertices` or all of `center`, `normal_azimuth`, `width`, `height`".into()),
    }
}

/// Parses a scene document; `path` is only used in error messages.
pub fn parse_scene(text: &str, path: &Path) -> Result<Scene> {
    let file: SceneFile = parse_toml(text, path)?;
    check_schema(file.schema, text, path)?;
    let anchored = |prefix: &str, index: usize, e: Error| config_error(path, line_of(text, prefix, index), e);
    let tx = pose(&file.tx).map_err(|e| anchored("[tx]", 0, e))?;
    let rx = pose(&file.rx).map_err(|e| anchored("[rx]", 0, e))?;
    let mut scene = Scene::new(tx, rx, file.duration);
    scene.los = file.los;
    if !(file.duration > 0.0) {
        return Err(config_error(path, line_of(text, "duration", 0), "duration must be positive"));
    }
    if let Some(m) = file.materials {
        m.validate().map_err(|e| anchored("[materials]", 0, e))?;
        scene.materials = m;
    }
    for (i, f) in file.facets.iter().enumerate() {
        let facet = facet(f).map_err(|e| config_error(path, line_of(text, "[[facets]]", i), e))?;
        facet.validate().map_err(|e| anchored("[[facets]]", i, e))?;
        scene.facets.push(facet);
    }
    for (i, m) in file.movers.iter().enumerate() {
        let mover = Mover {
            id: m.id.clone(),
            size: m.size,
            profile: m.profile.clone(),
            waypoints: m
                .waypoints
                .iter()
                .map(|w| Waypoint {
                    t: w.t,
                    position: Vec3::new(w.position[0], w.position[1], 0.0),
                })
                .collect(),
            reflection: m.reflection,
        };
        mover.validate().map_err(|e| anchored("[[movers]]", i, e))?;
        scene.movers.push(mover);
    }
    Ok(scene)
}

/// Parses a run-configuration document.
pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let file: ConfigFile = parse_toml(text, path)?;
    check_schema(file.schema, text, path)?;
    let s = &file.sounder;
    let a = &file.arrays;
    let e = &file.evaluation;
    let sounder = SounderConfig {
        tone_count: s.tone_count,
        tone_spacing_hz: s.tone_spacing_hz,
        center_frequency_hz: s.center_frequency_hz,
        bandwidth_hz: s.bandwidth_hz,
        waveform_s: s.waveform_s,
        guard_s: s.guard_s,
        snapshots_per_burst: s.snapshots_per_burst,
        burst_period_s: s.burst_period_s,
        bursts: s.bursts,
        eirp_dbm: s.eirp_dbm,
        noise_figure_db: s.noise_figure_db,
        arrays: ArraySetup {
            tx_grid: BeamGrid {
                azimuths: a.tx_azimuths.clone(),
                elevations: a.tx_elevations.clone(),
            },
            rx_grid: BeamGrid {
                azimuths: a.rx_azimuths.clone(),
                elevations: a.rx_elevations.clone(),
            },
            tx_shape: a.tx_pattern.shape(),
            rx_shape: a.rx_pattern.shape(),
        },
        calibration: s.calibration,
        calibration_seed: s.calibration_seed,
        noiseless: s.noiseless,
        seed: 0,
    };
    sounder
        .arrays
        .validate()
        .map_err(|err| config_error(path, line_of(text, "[arrays]", 0), err))?;
    sounder
        .validate()
        .map_err(|err| config_error(path, line_of(text, "[sounder]", 0), err))?;
    let evaluation = EvalConfig {
        window: e.window,
        detection: ThresholdRule {
            margin_db: e.det_margin_db,
            dynamic_range_db: e.dynamic_range_db,
        },
        delay_spread: ThresholdRule {
            margin_db: e.det_margin_db,
            dynamic_range_db: e.delay_spread_range_db,
        },
        noise_fraction: e.noise_fraction,
        ghost_margin_db: e.ghost_margin_db,
        gates: TrackGates {
            delay_bins: e.track_delay_bins,
            angle_deg: e.track_angle_deg,
            max_miss: e.track_max_miss,
        },
        idle_bursts: e.idle_bursts,
        hysteresis_db: e.hysteresis_db,
        dwell_bursts: e.dwell_bursts,
        ..EvalConfig::default()
    };
    if !(evaluation.noise_fraction > 0.0 && evaluation.noise_fraction <= 1.0) || evaluation.dwell_bursts == 0 {
        return Err(config_error(
            path,
            line_of(text, "[evaluation]", 0),
            "noise_fraction must be in (0, 1] and dwell_bursts >= 1",
        ));
    }
    Ok(RunConfig { sounder, evaluation })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: PathBuf::from(path),
        message: e.to_string(),
    })
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    parse_scene(&read(path)?, path)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&read(path)?, path)
}

fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("file structs always serialize")
}

/// Scene as a schema-1 document (facets written as explicit vertices).
pub fn scene_to_toml(scene: &Scene) -> String {
    let pose = |p: &Pose| PoseFile {
        position: [p.position.x, p.position.y],
        height: p.position.z,
        azimuth: p.azimuth,
    };
    let file = SceneFile {
        schema: SCHEMA_VERSION,
        duration: scene.duration,
        los: scene.los,
        tx: pose(&scene.tx),
        rx: pose(&scene.rx),
        materials: Some(scene.materials),
        facets: scene
            .facets
            .iter()
            .map(|f| FacetFile {
                vertices: Some(f.vertices.map(|v| [v.x, v.y, v.z])),
                reflection_loss_db: f.reflection_loss_db,
                ..FacetFile::default()
            })
            .collect(),
        movers: scene
            .movers
            .iter()
            .map(|m| MoverFile {
                id: m.id.clone(),
                size: m.size,
                profile: m.profile.clone(),
                waypoints: m
                    .waypoints
                    .iter()
                    .map(|w| WaypointFile {
                        t: w.t,
                        position: [w.position.x, w.position.y],
                    })
                    .collect(),
                reflection: m.reflection,
            })
            .collect(),
    };
    to_toml(&file)
}

pub fn config_to_toml(config: &RunConfig) -> String {
    to_toml(&ConfigFile {
        schema: SCHEMA_VERSION,
        sounder: (&config.sounder).into(),
        arrays: (&config.sounder.arrays).into(),
        evaluation: (&config.evaluation).into(),
    })
}
