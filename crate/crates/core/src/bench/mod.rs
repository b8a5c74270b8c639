//! The benchmark driver behind the `fhv` binary: builds volumes, renders
//! camera paths with any of the three techniques and writes JSON reports.

mod config;
mod report;

use std::path::Path;
use std::time::Instant;

use glam::DVec4;
use thiserror::Error;

pub use config::{
    load_scene_source, orbit_path, parse_camera_path, parse_resolution, CameraPose, PartialConfig, RunConfig, Technique,
};
pub use report::{
    BenchReport, FrameReport, MemoryRow, PhaseTimes, StrategyRelations, StrategyRow, REPORT_SCHEMA,
};

use crate::raster::{capture_pass_with, CaptureStats, CaptureStrategy, EmittedFragment, Execution, RasterConfig};
use crate::raycast::{raycast_render, RaycastConfig};
use crate::reconstruct::{default_lights, geometry_pass, lighting_pass, splat_render, ImageBuffer, SplatConfig};
use crate::scene::{Axis, Scene};
use crate::volume::{
    pofa_build, pofl_build, ppfl_build, read_snapshot, write_snapshot, LayoutKind, MemoryParams,
    RecordLayout, Volume, VolumeError, DEFAULT_DEPTH_COMPLEXITY, DEFAULT_GBUFFER_PAYLOAD,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("load failed: {0}")]
    Load(String),
    #[error("incompatible: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl BenchError {
    /// Process exit status for this error. An overflowed build is not an
    /// error; it exits with [`EXIT_OVERFLOW`] after writing its outputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Load(_) => 3,
            BenchError::Incompatible(_) => 5,
            BenchError::Volume(VolumeError::ViewDependentLayout(_)) => 5,
            BenchError::Volume(_) | BenchError::Io { .. } => 1,
        }
    }
}

pub const EXIT_OVERFLOW: i32 = 4;

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> BenchError {
    let context = context.into();
    move |source| BenchError::Io { context, source }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn execution(cfg: &RunConfig) -> Execution {
    if cfg.threads > 1 {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

/// Runs `f` on a rayon pool of `cfg.threads` workers.
pub fn with_thread_pool<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn base_report(command: &str, cfg: &RunConfig) -> BenchReport {
    BenchReport {
        command: command.to_string(),
        scene: cfg.scene.clone(),
        layout: cfg.layout,
        strategy: cfg.strategy.label(),
        levels: cfg.levels,
        capture_resolution: cfg.capture_res,
        output_resolution: [cfg.out_res.0, cfg.out_res.1],
        technique: None,
        mode: None,
        execution: execution(cfg),
        threads: cfg.threads,
        seed: cfg.seed,
        capture: None,
        pool: None,
        overflowed: false,
        required_capacity: None,
        build_ms: None,
        memory: Vec::new(),
        frames: Vec::new(),
        frame0: None,
        steady_state: None,
        strategies: Vec::new(),
        relations: None,
        outputs: Vec::new(),
    }
}

fn default_capacity(cfg: &RunConfig) -> u64 {
    cfg.capacity
        .unwrap_or(DEFAULT_DEPTH_COMPLEXITY * cfg.capture_res as u64 * cfg.capture_res as u64)
}

/// Captures `scene` into the configured layout.
pub fn build_volume(scene: &Scene, cfg: &RunConfig) -> Result<(Volume, CaptureStats), BenchError> {
    let raster = RasterConfig::capture(cfg.capture_res).map_err(|e| BenchError::Config(e.to_string()))?;
    let exec = execution(cfg);
    let capacity = usize::try_from(default_capacity(cfg)).map_err(|_| BenchError::Config("capacity too large".into()))?;
    Ok(match cfg.layout {
        LayoutKind::Ppfl => {
            let (v, s) = ppfl_build(scene, cfg.strategy, &raster, capacity, exec)?;
            (Volume::Ppfl(v), s)
        }
        LayoutKind::Pofl => {
            let (v, s) = pofl_build(scene, cfg.strategy, &raster, cfg.levels, capacity, exec)?;
            (Volume::Pofl(v), s)
        }
        LayoutKind::Pofa => {
            let (v, s) = pofa_build(scene, cfg.strategy, &raster, cfg.levels, exec)?;
            (Volume::Pofa(v), s)
        }
        LayoutKind::Ds => return Err(BenchError::Incompatible("the deferred baseline has no volume to build".into())),
    })
}

/// Memory row for a built volume.
pub fn volume_memory(volume: &Volume, cfg: &RunConfig, record: RecordLayout) -> MemoryRow {
    let (width, height, levels) = match volume {
        Volume::Ppfl(v) => (v.width, v.height, cfg.levels),
        Volume::Pofl(v) => (v.resolution, v.resolution, v.levels),
        Volume::Pofa(v) => (v.resolution, v.resolution, v.levels),
    };
    let fragments = match volume {
        Volume::Pofa(v) => v.records.len() as u64,
        other => other.pool().capacity,
    };
    MemoryRow::new(
        volume.layout(),
        &MemoryParams {
            width,
            height,
            levels,
            record,
            fragments,
            gbuffer_payload: DEFAULT_GBUFFER_PAYLOAD,
        },
    )
}

/// Fragment counts of every capture strategy and the ordering checks
/// between them.
pub fn strategy_table(scene: &Scene, capture_res: u32, exec: Execution) -> Result<(Vec<StrategyRow>, StrategyRelations), BenchError> {
    let raster = RasterConfig::capture(capture_res).map_err(|e| BenchError::Config(e.to_string()))?;
    let mut rows = Vec::new();
    for strategy in CaptureStrategy::ALL {
        let stats = capture_pass_with(scene, strategy, &raster, &|_: &EmittedFragment| {}, exec).map_err(VolumeError::from)?;
        rows.push(StrategyRow {
            strategy: strategy.label(),
            stats,
        });
    }
    let footprint = 1.0 / capture_res as f64;
    let slack = scene.triangles.iter().map(|t| 2.0 * t.perimeter() / footprint).sum();
    let count = |s: CaptureStrategy| rows[CaptureStrategy::ALL.iter().position(|x| *x == s).unwrap()].stats.fragments_emitted;
    let relations = StrategyRelations::check(
        count(CaptureStrategy::OneView(Axis::Z)),
        count(CaptureStrategy::NormalSpace),
        count(CaptureStrategy::ThreeWayGeometry),
        count(CaptureStrategy::ThreeSeparate),
        slack,
    );
    Ok((rows, relations))
}

fn record_layout(cfg: &RunConfig, default: RecordLayout) -> RecordLayout {
    cfg.record_size.unwrap_or(default)
}

fn create_out_dir(dir: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))
}

pub fn write_report(report: &BenchReport, path: &Path) -> Result<(), BenchError> {
    let json = serde_json::to_string_pretty(report).expect("reports always serialize");
    std::fs::write(path, json + "\n").map_err(io_err(format!("writing {}", path.display())))
}

/// `build`: capture the scene, write `volume.fhv` and `build.json`.
pub fn run_build(cfg: &RunConfig) -> Result<BenchReport, BenchError> {
    let scene = load_scene_source(&cfg.scene, cfg.materials.as_deref())?;
    let exec = execution(cfg);
    let mut report = base_report("build", cfg);
    let start = Instant::now();
    let (volume, stats) = build_volume(&scene, cfg)?;
    report.build_ms = Some(elapsed_ms(start));
    fill_build_fields(&mut report, &volume, stats, cfg);

    if cfg.compare_strategies {
        let (rows, relations) = strategy_table(&scene, cfg.capture_res, exec)?;
        report.strategies = rows;
        report.relations = Some(relations);
    }

    create_out_dir(&cfg.out_dir)?;
    let snapshot = cfg.snapshot.clone().unwrap_or_else(|| cfg.out_dir.join("volume.fhv"));
    write_snapshot(&snapshot, &volume, record_layout(cfg, RecordLayout::Packed36))
        .map_err(|e| BenchError::Load(format!("{}: {e}", snapshot.display())))?;
    let json = cfg.out_dir.join("build.json");
    report.outputs = vec![path_string(&snapshot), path_string(&json)];
    write_report(&report, &json)?;
    Ok(report)
}

fn fill_build_fields(report: &mut BenchReport, volume: &Volume, stats: CaptureStats, cfg: &RunConfig) {
    let pool = volume.pool();
    report.layout = volume.layout();
    report.capture = Some(stats);
    report.pool = Some(pool);
    report.overflowed = pool.overflowed;
    report.required_capacity = pool.overflowed.then_some(pool.requested);
    report.memory = vec![volume_memory(volume, cfg, record_layout(cfg, RecordLayout::Packed36))];
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn camera_poses(cfg: &RunConfig) -> Result<Vec<CameraPose>, BenchError> {
    match &cfg.path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| BenchError::Load(format!("{}: {e}", p.display())))?;
            parse_camera_path(&text)
        }
        None => Ok(orbit_path(cfg.frames, cfg.seed)),
    }
}

fn background() -> DVec4 {
    DVec4::ZERO
}

/// `render`: render every pose of the camera path. FHV techniques load or
/// build the volume once, before frame 0; the deferred baseline rasterizes
/// the scene again for every frame.
pub fn run_render(cfg: &RunConfig) -> Result<BenchReport, BenchError> {
    let scene = load_scene_source(&cfg.scene, cfg.materials.as_deref())?;
    let poses = camera_poses(cfg)?;
    let cameras = poses
        .iter()
        .map(|p| p.camera(cfg.out_res))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| BenchError::Load(format!("camera path: {e}")))?;
    let exec = execution(cfg);
    let lights = default_lights();
    let mut report = base_report("render", cfg);
    report.technique = Some(cfg.technique);

    let mut build_ms = 0.0;
    let volume = if cfg.technique == Technique::Deferred {
        report.layout = LayoutKind::Ds;
        None
    } else {
        let start = Instant::now();
        let volume = match &cfg.snapshot {
            Some(path) => read_snapshot(path).map_err(|e| BenchError::Load(format!("{}: {e}", path.display())))?,
            None => {
                let (v, stats) = build_volume(&scene, cfg)?;
                report.capture = Some(stats);
                v
            }
        };
        build_ms = elapsed_ms(start);
        report.build_ms = Some(build_ms);
        let stats = report.capture.unwrap_or_default();
        fill_build_fields(&mut report, &volume, stats, cfg);
        if cfg.snapshot.is_some() {
            report.capture = None;
        }
        Some(volume)
    };

    if cfg.technique == Technique::Raycast {
        let v = volume.as_ref().unwrap();
        if v.as_octree().is_none() {
            return Err(BenchError::Incompatible(format!(
                "raycasting needs an octree layout, the volume is {:?}",
                v.layout()
            )));
        }
        report.mode = Some(cfg.mode);
    }

    create_out_dir(&cfg.out_dir)?;
    for (index, camera) in cameras.iter().enumerate() {
        let mut frame = FrameReport {
            index: index as u32,
            geometry_ms: 0.0,
            evaluation_ms: 0.0,
            total_ms: 0.0,
            covered_pixels: 0,
            raycast: None,
        };
        let img: ImageBuffer = match (cfg.technique, &volume) {
            (Technique::Deferred, _) => {
                let start = Instant::now();
                let gbuf = geometry_pass(&scene, camera);
                frame.geometry_ms = elapsed_ms(start);
                let start = Instant::now();
                let img = lighting_pass(&gbuf, &scene, camera, &lights, background());
                frame.evaluation_ms = elapsed_ms(start);
                img
            }
            (Technique::Splat, Some(v)) => {
                let radius = cfg.splat_radius.unwrap_or(1.0 / cfg.capture_res as f64);
                let splat = SplatConfig {
                    radius,
                    background: background(),
                    exec,
                };
                let start = Instant::now();
                let img = splat_render(v.records(), &scene.materials, camera, &lights, &splat);
                frame.evaluation_ms = elapsed_ms(start);
                img
            }
            (Technique::Raycast, Some(v)) => {
                let octree = v.as_octree().unwrap();
                let mut rc = match cfg.splat_radius {
                    Some(r) => RaycastConfig::with_radius(r, cfg.mode),
                    None => RaycastConfig::for_volume(octree, cfg.mode),
                };
                rc.alpha_cutoff = cfg.alpha_cutoff;
                rc.background = background();
                let start = Instant::now();
                let (img, stats) = raycast_render(octree, &scene.materials, camera, &lights, &rc, exec);
                frame.evaluation_ms = elapsed_ms(start);
                frame.raycast = Some(stats);
                img
            }
            (_, None) => unreachable!("volume techniques always have a volume"),
        };
        if index == 0 {
            frame.geometry_ms += build_ms;
        }
        frame.total_ms = frame.geometry_ms + frame.evaluation_ms;
        frame.covered_pixels = img.covered() as u64;

        let stem = cfg.out_dir.join(format!("frame_{index:03}"));
        let ppm = stem.with_extension("ppm");
        let dump = stem.with_extension("f32");
        img.write_ppm(&ppm).map_err(|e| BenchError::Io {
            context: path_string(&ppm),
            source: std::io::Error::other(e.to_string()),
        })?;
        img.write_float_dump(&dump).map_err(|e| BenchError::Io {
            context: path_string(&dump),
            source: std::io::Error::other(e.to_string()),
        })?;
        report.outputs.push(path_string(&ppm));
        report.outputs.push(path_string(&dump));
        report.frames.push(frame);
    }
    if cfg.technique == Technique::Deferred {
        report.memory = vec![MemoryRow::new(
            LayoutKind::Ds,
            &MemoryParams {
                width: cfg.out_res.0,
                height: cfg.out_res.1,
                levels: 0,
                record: RecordLayout::Packed36,
                fragments: 0,
                gbuffer_payload: DEFAULT_GBUFFER_PAYLOAD,
            },
        )];
    }
    report.frame0 = report.frames.first().map(PhaseTimes::of);
    report.steady_state = PhaseTimes::mean(&report.frames[1..]);
    let json = cfg.out_dir.join("render.json");
    report.outputs.push(path_string(&json));
    write_report(&report, &json)?;
    Ok(report)
}

/// Output size used by `report-memory` when none is given.
pub const MEMORY_TABLE_OUT_RES: (u32, u32) = (1280, 720);
/// Capture size used by `report-memory` when none is given.
pub const MEMORY_TABLE_CAPTURE_RES: u32 = 1000;

/// `report-memory`: the DS, PPFL, POFL and POFA rows, the octree layouts at
/// 6, 7 and 8 levels. POFA uses the exact fragment count of the scene's
/// capture unless `fragments` is given.
pub fn report_memory(cfg: &RunConfig, explicit: MemoryTableSizes) -> Result<BenchReport, BenchError> {
    let out_res = explicit.out_res.unwrap_or(MEMORY_TABLE_OUT_RES);
    let capture_res = explicit.capture_res.unwrap_or(MEMORY_TABLE_CAPTURE_RES);
    let record = record_layout(cfg, RecordLayout::Aligned48);
    let exact = match cfg.fragments {
        Some(n) => n,
        None => {
            let scene = load_scene_source(&cfg.scene, cfg.materials.as_deref())?;
            let raster = RasterConfig::capture(capture_res).map_err(|e| BenchError::Config(e.to_string()))?;
            capture_pass_with(&scene, cfg.strategy, &raster, &|_: &EmittedFragment| {}, execution(cfg))
                .map_err(VolumeError::from)?
                .fragments_emitted
        }
    };
    let capacity = cfg
        .capacity
        .unwrap_or(DEFAULT_DEPTH_COMPLEXITY * capture_res as u64 * capture_res as u64);
    let mut report = base_report("report-memory", cfg);
    report.capture_resolution = capture_res;
    report.output_resolution = [out_res.0, out_res.1];
    let params = |width, height, levels, fragments| MemoryParams {
        width,
        height,
        levels,
        record,
        fragments,
        gbuffer_payload: DEFAULT_GBUFFER_PAYLOAD,
    };
    report.memory.push(MemoryRow::new(LayoutKind::Ds, &params(out_res.0, out_res.1, 0, 0)));
    report.memory.push(MemoryRow::new(LayoutKind::Ppfl, &params(capture_res, capture_res, 0, capacity)));
    for levels in [6, 7, 8] {
        report.memory.push(MemoryRow::new(LayoutKind::Pofl, &params(capture_res, capture_res, levels, capacity)));
    }
    for levels in [6, 7, 8] {
        report.memory.push(MemoryRow::new(LayoutKind::Pofa, &params(capture_res, capture_res, levels, exact)));
    }
    write_named_report(&mut report, cfg, "memory.json")?;
    Ok(report)
}

/// Sizes given explicitly on the command line, as opposed to the run
/// defaults.
#[derive(Clone, Copy, Debug, Default)]
pub struct MemoryTableSizes {
    pub out_res: Option<(u32, u32)>,
    pub capture_res: Option<u32>,
}

/// `compare-strategies`: fragment counts for the four strategies.
pub fn compare_strategies(cfg: &RunConfig) -> Result<BenchReport, BenchError> {
    let scene = load_scene_source(&cfg.scene, cfg.materials.as_deref())?;
    let mut report = base_report("compare-strategies", cfg);
    let (rows, relations) = strategy_table(&scene, cfg.capture_res, execution(cfg))?;
    report.strategies = rows;
    report.relations = Some(relations);
    write_named_report(&mut report, cfg, "compare.json")?;
    Ok(report)
}

fn write_named_report(report: &mut BenchReport, cfg: &RunConfig, name: &str) -> Result<(), BenchError> {
    create_out_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join(name);
    report.outputs.push(path_string(&path));
    write_report(report, &path)
}
