use std::path::{Path, PathBuf};

use glam::DVec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::raster::CaptureStrategy;
use crate::raycast::RaycastMode;
use crate::scene::{normalize_scene, BuiltinScene, Camera, CameraError, Lens, Scene, DEFAULT_MARGIN};
use crate::volume::{LayoutKind, RecordLayout, DEFAULT_LEVELS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Deferred,
    Splat,
    Raycast,
}

impl std::str::FromStr for Technique {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "deferred" | "ds" => Ok(Self::Deferred),
            "splat" | "splatting" => Ok(Self::Splat),
            "raycast" | "ray" => Ok(Self::Raycast),
            other => Err(format!("unknown technique {other:?}")),
        }
    }
}

/// Every setting is optional. Command-line flags are layered over a config
/// file with the same keys.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, clap::Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PartialConfig {
    /// Scene file (.obj) or `builtin:<name>`
    #[arg(long)]
    pub scene: Option<String>,
    /// Material table for an .obj scene
    #[arg(long)]
    pub materials: Option<PathBuf>,
    /// Volume snapshot to render instead of capturing the scene
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// ppfl | pofl | pofa
    #[arg(long)]
    pub layout: Option<String>,
    /// one-view[:x|y|z] | three-separate | three-way | normal
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub levels: Option<u32>,
    #[arg(long)]
    pub capture_res: Option<u32>,
    /// WIDTHxHEIGHT or a single size
    #[arg(long)]
    pub out_res: Option<String>,
    /// deferred | splat | raycast
    #[arg(long)]
    pub technique: Option<String>,
    /// r | rt | rts
    #[arg(long)]
    pub mode: Option<String>,
    /// Pose file, one "eye dir up fov" line per frame (fov in degrees, 0 for orthographic)
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Frames of the default orbit when no pose file is given
    #[arg(long)]
    pub frames: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "FHV_THREADS")]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub alpha_cutoff: Option<f64>,
    #[arg(long)]
    pub splat_radius: Option<f64>,
    /// Pool capacity for the linked-list layouts
    #[arg(long)]
    pub capacity: Option<u64>,
    /// Bytes per linked-list record: 36 or 48
    #[arg(long)]
    pub record_size: Option<u64>,
    /// Fragment count used by report-memory instead of capturing the scene
    #[arg(long)]
    pub fragments: Option<u64>,
    /// Also count fragments for every capture strategy
    #[arg(long)]
    #[serde(default)]
    pub compare_strategies: bool,
}

impl PartialConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set here win over `fallback`.
    pub fn or(self, fallback: PartialConfig) -> PartialConfig {
        PartialConfig {
            scene: self.scene.or(fallback.scene),
            materials: self.materials.or(fallback.materials),
            snapshot: self.snapshot.or(fallback.snapshot),
            layout: self.layout.or(fallback.layout),
            strategy: self.strategy.or(fallback.strategy),
            levels: self.levels.or(fallback.levels),
            capture_res: self.capture_res.or(fallback.capture_res),
            out_res: self.out_res.or(fallback.out_res),
            technique: self.technique.or(fallback.technique),
            mode: self.mode.or(fallback.mode),
            path: self.path.or(fallback.path),
            frames: self.frames.or(fallback.frames),
            seed: self.seed.or(fallback.seed),
            threads: self.threads.or(fallback.threads),
            out_dir: self.out_dir.or(fallback.out_dir),
            alpha_cutoff: self.alpha_cutoff.or(fallback.alpha_cutoff),
            splat_radius: self.splat_radius.or(fallback.splat_radius),
            capacity: self.capacity.or(fallback.capacity),
            record_size: self.record_size.or(fallback.record_size),
            fragments: self.fragments.or(fallback.fragments),
            compare_strategies: self.compare_strategies || fallback.compare_strategies,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scene: String,
    pub materials: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub layout: LayoutKind,
    pub strategy: CaptureStrategy,
    pub levels: u32,
    pub capture_res: u32,
    pub out_res: (u32, u32),
    pub technique: Technique,
    pub mode: RaycastMode,
    pub path: Option<PathBuf>,
    pub frames: u32,
    pub seed: u64,
    pub threads: usize,
    pub out_dir: PathBuf,
    pub alpha_cutoff: f64,
    pub splat_radius: Option<f64>,
    pub capacity: Option<u64>,
    pub record_size: Option<RecordLayout>,
    pub fragments: Option<u64>,
    pub compare_strategies: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: "builtin:three-quads".into(),
            materials: None,
            snapshot: None,
            layout: LayoutKind::Pofa,
            strategy: CaptureStrategy::NormalSpace,
            levels: DEFAULT_LEVELS,
            capture_res: 256,
            out_res: (256, 256),
            technique: Technique::Raycast,
            mode: RaycastMode::Transparency,
            path: None,
            frames: 3,
            seed: 0,
            threads: 1,
            out_dir: PathBuf::from("fhv-out"),
            alpha_cutoff: 1.0,
            splat_radius: None,
            capacity: None,
            record_size: None,
            fragments: None,
            compare_strategies: false,
        }
    }
}

fn parse<T: std::str::FromStr<Err = String>>(v: Option<String>, default: T) -> Result<T, BenchError> {
    v.map_or(Ok(default), |s| s.parse().map_err(BenchError::Config))
}

pub fn parse_resolution(s: &str) -> Result<(u32, u32), BenchError> {
    let bad = || BenchError::Config(format!("bad resolution {s:?}"));
    let (w, h) = match s.split_once(['x', 'X']) {
        Some((w, h)) => (w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

impl RunConfig {
    pub fn resolve(p: PartialConfig) -> Result<Self, BenchError> {
        let d = RunConfig::default();
        let capture_res = p.capture_res.unwrap_or(d.capture_res);
        let cfg = RunConfig {
            scene: p.scene.unwrap_or(d.scene),
            materials: p.materials,
            snapshot: p.snapshot,
            layout: parse(p.layout, d.layout)?,
            strategy: parse(p.strategy, d.strategy)?,
            levels: p.levels.unwrap_or(d.levels),
            capture_res,
            out_res: match p.out_res {
                Some(s) => parse_resolution(&s)?,
                None => (capture_res, capture_res),
            },
            technique: parse(p.technique, d.technique)?,
            mode: parse(p.mode, d.mode)?,
            path: p.path,
            frames: p.frames.unwrap_or(d.frames),
            seed: p.seed.unwrap_or(d.seed),
            threads: p.threads.unwrap_or(d.threads),
            out_dir: p.out_dir.unwrap_or(d.out_dir),
            alpha_cutoff: p.alpha_cutoff.unwrap_or(d.alpha_cutoff),
            splat_radius: p.splat_radius,
            capacity: p.capacity,
            record_size: p
                .record_size
                .map(|b| RecordLayout::from_bytes(b).ok_or_else(|| BenchError::Config(format!("record size {b} is not 36 or 48"))))
                .transpose()?,
            fragments: p.fragments,
            compare_strategies: p.compare_strategies,
        };
        if cfg.capture_res == 0 || cfg.frames == 0 || cfg.threads == 0 {
            return Err(BenchError::Config("resolutions, frames and threads must be at least 1".into()));
        }
        if !(cfg.alpha_cutoff > 0.0 && cfg.alpha_cutoff <= 1.0) {
            return Err(BenchError::Config(format!("alpha cutoff {} is outside (0, 1]", cfg.alpha_cutoff)));
        }
        if cfg.splat_radius.is_some_and(|r| !(r > 0.0)) {
            return Err(BenchError::Config("splat radius must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn layout_label(&self) -> String {
        format!("{:?}", self.layout).to_uppercase()
    }
}

/// Loads `builtin:<name>` or an .obj file. Files are normalized into the
/// unit cube; builtin scenes already live there.
pub fn load_scene_source(source: &str, materials: Option<&Path>) -> Result<Scene, BenchError> {
    if let Some(name) = source.strip_prefix("builtin:") {
        let builtin: BuiltinScene = name.parse().map_err(BenchError::Load)?;
        return Ok(builtin.build());
    }
    let scene = crate::scene::load_scene(Path::new(source), materials).map_err(|e| BenchError::Load(format!("{source}: {e}")))?;
    let (scene, _) = normalize_scene(&scene, DEFAULT_MARGIN).map_err(|e| BenchError::Load(format!("{source}: {e}")))?;
    Ok(scene)
}

/// One line of a camera path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CameraPose {
    pub eye: [f64; 3],
    pub dir: [f64; 3],
    pub up: [f64; 3],
    /// Vertical field of view in degrees; zero selects an orthographic view
    /// of the unit cube.
    pub fov: f64,
}

impl CameraPose {
    pub fn camera(&self, (w, h): (u32, u32)) -> Result<Camera, CameraError> {
        let v = |a: [f64; 3]| DVec3::from_array(a);
        if self.fov == 0.0 {
            Camera::new(Lens::Orthographic { extent: 1.0 }, v(self.eye), v(self.dir), v(self.up), (w, h), -4.0, 4.0)
        } else {
            Camera::new(
                Lens::Perspective {
                    fov_y: self.fov.to_radians(),
                },
                v(self.eye),
                v(self.dir),
                v(self.up),
                (w, h),
                1e-3,
                100.0,
            )
        }
    }
}

pub fn parse_camera_path(text: &str) -> Result<Vec<CameraPose>, BenchError> {
    let mut poses = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| BenchError::Load(format!("camera path line {}: {e}", no + 1)))?;
        if nums.len() != 10 {
            return Err(BenchError::Load(format!(
                "camera path line {}: expected 10 numbers (eye, dir, up, fov), found {}",
                no + 1,
                nums.len()
            )));
        }
        poses.push(CameraPose {
            eye: [nums[0], nums[1], nums[2]],
            dir: [nums[3], nums[4], nums[5]],
            up: [nums[6], nums[7], nums[8]],
            fov: nums[9],
        });
    }
    if poses.is_empty() {
        return Err(BenchError::Load("camera path has no poses".into()));
    }
    Ok(poses)
}

/// Frame 0 looks straight down -z orthographically, matching the default
/// capture direction; the remaining frames orbit the cube center in
/// perspective, starting at a seed-dependent angle.
pub fn orbit_path(frames: u32, seed: u64) -> Vec<CameraPose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: f64 = if seed == 0 { 0.0 } else { rng.random_range(0.0..std::f64::consts::TAU) };
    let mut poses = vec![CameraPose {
        eye: [0.5, 0.5, 0.5],
        dir: [0.0, 0.0, -1.0],
        up: [0.0, 1.0, 0.0],
        fov: 0.0,
    }];
    for k in 1..frames {
        let a = phase + std::f64::consts::TAU * k as f64 / frames as f64;
        let eye = DVec3::splat(0.5) + DVec3::new(a.sin(), 0.35, a.cos()) * 2.2;
        let dir = DVec3::splat(0.5) - eye;
        poses.push(CameraPose {
            eye: eye.to_array(),
            dir: dir.to_array(),
            up: [0.0, 1.0, 0.0],
            fov: 35.0,
        });
    }
    poses
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = RunConfig::resolve(PartialConfig::default()).unwrap();
        assert_eq!(c.out_res, (256, 256));
        assert_eq!(c.layout, LayoutKind::Pofa);
        assert_eq!(c.strategy, CaptureStrategy::NormalSpace);
    }

    #[test]
    fn flags_win_over_file() {
        let file: PartialConfig = toml::from_str("layout = \"pofl\"\nlevels = 5\ncapture-res = 64\n").unwrap();
        let cli = PartialConfig {
            levels: Some(7),
            ..Default::default()
        };
        let c = RunConfig::resolve(cli.or(file)).unwrap();
        assert_eq!((c.layout, c.levels, c.capture_res), (LayoutKind::Pofl, 7, 64));
        assert!(toml::from_str::<PartialConfig>("colour = 1").is_err());
    }

    #[test]
    fn bad_values_are_config_errors() {
        for p in [
            PartialConfig { layout: Some("zz".into()), ..Default::default() },
            PartialConfig { out_res: Some("0x3".into()), ..Default::default() },
            PartialConfig { record_size: Some(40), ..Default::default() },
            PartialConfig { alpha_cutoff: Some(0.0), ..Default::default() },
        ] {
            assert!(matches!(RunConfig::resolve(p), Err(BenchError::Config(_))));
        }
        assert_eq!(parse_resolution("1280x720").unwrap(), (1280, 720));
    }

    #[test]
    fn camera_path_lines() {
        let text = "# eye dir up fov\n0.5 0.5 3  0 0 -1  0 1 0  40\n\n0.5 0.5 0.5 0 0 -1 0 1 0 0\n";
        let poses = parse_camera_path(text).unwrap();
        assert_eq!(poses.len(), 2);
        assert!(poses[0].camera((8, 8)).unwrap().lens == Lens::Perspective { fov_y: 40f64.to_radians() });
        assert!(poses[1].camera((8, 8)).unwrap().is_orthographic());
        assert!(matches!(parse_camera_path("1 2 3"), Err(BenchError::Load(_))));
        assert!(matches!(parse_camera_path(""), Err(BenchError::Load(_))));
    }

    #[test]
    fn orbit_is_seeded() {
        assert_eq!(orbit_path(4, 9), orbit_path(4, 9));
        assert_ne!(orbit_path(4, 9), orbit_path(4, 10));
        assert_eq!(orbit_path(4, 9)[0], orbit_path(4, 10)[0]);
        for p in orbit_path(5, 3) {
            assert!(p.camera((4, 4)).is_ok());
        }
    }

    #[test]
    fn builtin_and_missing_scenes() {
        assert!(load_scene_source("builtin:icosphere", None).is_ok());
        assert!(matches!(load_scene_source("builtin:teapot", None), Err(BenchError::Load(_))));
        assert!(matches!(load_scene_source("/no/such/file.obj", None), Err(BenchError::Load(_))));
    }
}
