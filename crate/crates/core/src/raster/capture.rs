use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rasterize_triangle, tangent_basis, world_pixel_footprint, EmittedFragment, RasterConfig, RasterError};
use crate::scene::{capture_camera, Axis, Camera, Lens, Scene, Triangle};

/// How the scene is turned into fragments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaptureStrategy {
    /// One pass from a single principal axis.
    OneView(Axis),
    /// Three full passes, one per principal axis.
    ThreeSeparate,
    /// One pass emitting every triangle under all three axis projections.
    ThreeWayGeometry,
    /// One pass rasterizing each triangle as seen along its own normal.
    NormalSpace,
}

impl CaptureStrategy {
    pub const ALL: [CaptureStrategy; 4] = [
        CaptureStrategy::OneView(Axis::Z),
        CaptureStrategy::ThreeSeparate,
        CaptureStrategy::ThreeWayGeometry,
        CaptureStrategy::NormalSpace,
    ];

    pub fn label(self) -> String {
        match self {
            CaptureStrategy::OneView(axis) => format!("one-view:{}", format!("{axis:?}").to_lowercase()),
            CaptureStrategy::ThreeSeparate => "three-separate".into(),
            CaptureStrategy::ThreeWayGeometry => "three-way".into(),
            CaptureStrategy::NormalSpace => "normal".into(),
        }
    }

    /// Whether the fragments are tied to one raster grid (usable for
    /// per-pixel storage).
    pub fn is_view_aligned(self) -> bool {
        matches!(self, CaptureStrategy::OneView(_))
    }
}

impl std::str::FromStr for CaptureStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, tail) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "one-view" | "view" => Ok(CaptureStrategy::OneView(if tail.is_empty() {
                Axis::Z
            } else {
                tail.parse()?
            })),
            "three-separate" | "3sep" => Ok(CaptureStrategy::ThreeSeparate),
            "three-way" | "3way" => Ok(CaptureStrategy::ThreeWayGeometry),
            "normal" | "normal-space" => Ok(CaptureStrategy::NormalSpace),
            other => Err(format!("unknown capture strategy {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureStats {
    pub fragments_emitted: u64,
    pub triangles_processed: u64,
    pub passes: u32,
    pub draw_batches: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    /// Triangles in scene order; defines the canonical fragment order.
    #[default]
    Sequential,
    /// Triangles spread over the rayon pool; only the fragment multiset is
    /// reproducible.
    Parallel,
}

/// Receives fragments, possibly from several threads at once.
pub trait FragmentSink: Sync {
    fn emit(&self, fragment: &EmittedFragment);
}

impl<F: Fn(&EmittedFragment) + Sync> FragmentSink for F {
    fn emit(&self, fragment: &EmittedFragment) {
        self(fragment)
    }
}

/// Orthographic capture camera for `axis` with the pixel footprint of `cfg`.
pub fn capture_camera_for(scene: &Scene, axis: Axis, cfg: &RasterConfig) -> Result<Camera, RasterError> {
    let footprint = world_pixel_footprint(cfg)?;
    let mut cam = capture_camera(scene, axis, cfg.width);
    cam.height = cfg.height;
    cam.lens = Lens::Orthographic {
        extent: footprint * cfg.height as f64,
    };
    Ok(cam)
}

/// Sequential [`capture_pass_with`].
pub fn capture_pass(
    scene: &Scene,
    strategy: CaptureStrategy,
    cfg: &RasterConfig,
    sink: &impl FragmentSink,
) -> Result<CaptureStats, RasterError> {
    capture_pass_with(scene, strategy, cfg, sink, Execution::Sequential)
}

pub fn capture_pass_with(
    scene: &Scene,
    strategy: CaptureStrategy,
    cfg: &RasterConfig,
    sink: &impl FragmentSink,
    exec: Execution,
) -> Result<CaptureStats, RasterError> {
    let footprint = world_pixel_footprint(cfg)?;
    let axis_cfg = |axis| -> Result<RasterConfig, RasterError> {
        Ok(RasterConfig::from_camera(&capture_camera_for(scene, axis, cfg)?, false))
    };
    let tri_count = scene.triangles.len() as u64;
    let objects = scene.object_count();
    let emitted = AtomicUsize::new(0);

    let per_triangle = |f: &(dyn Fn(&Triangle) -> usize + Sync)| match exec {
        Execution::Sequential => {
            let n: usize = scene.triangles.iter().map(f).sum();
            emitted.fetch_add(n, Ordering::Relaxed);
        }
        Execution::Parallel => {
            let n: usize = scene.triangles.par_iter().map(f).sum();
            emitted.fetch_add(n, Ordering::Relaxed);
        }
    };
    let emit = |frag: &EmittedFragment| sink.emit(frag);

    let (passes, triangles_processed) = match strategy {
        CaptureStrategy::OneView(axis) => {
            let c = axis_cfg(axis)?;
            per_triangle(&|t| rasterize_triangle(t, &c, emit));
            (1, tri_count)
        }
        CaptureStrategy::ThreeSeparate => {
            for axis in Axis::ALL {
                let c = axis_cfg(axis)?;
                per_triangle(&|t| rasterize_triangle(t, &c, emit));
            }
            (3, 3 * tri_count)
        }
        CaptureStrategy::ThreeWayGeometry => {
            let cs = [axis_cfg(Axis::X)?, axis_cfg(Axis::Y)?, axis_cfg(Axis::Z)?];
            per_triangle(&|t| cs.iter().map(|c| rasterize_triangle(t, c, emit)).sum());
            (1, tri_count)
        }
        CaptureStrategy::NormalSpace => {
            per_triangle(&|t| match normal_space_config(t, footprint) {
                Some(c) => rasterize_triangle(t, &c, emit),
                None => 0,
            });
            (1, tri_count)
        }
    };

    Ok(CaptureStats {
        fragments_emitted: emitted.into_inner() as u64,
        triangles_processed,
        passes,
        draw_batches: passes * objects,
    })
}

/// Orthographic window looking down `-face_normal`, snapped outward to the
/// tangent-plane lattice of spacing `pitch` so coplanar neighbours share a
/// sample grid.
fn normal_space_config(tri: &Triangle, pitch: f64) -> Option<RasterConfig> {
    if tri.is_degenerate() {
        return None;
    }
    let basis = tangent_basis(tri.face_normal).ok()?;
    let (t, b, n) = (basis.row(0), basis.row(1), basis.row(2));
    let uv = tri.positions().map(|p| (p.dot(t), p.dot(b)));
    let lattice = |lo: f64, hi: f64| {
        let k0 = (lo / pitch).floor();
        let k1 = (hi / pitch).ceil().max(k0 + 1.0);
        (k0, (k1 - k0) as u32)
    };
    let umin = uv.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let umax = uv.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let vmin = uv.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let vmax = uv.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let (ku, w) = lattice(umin, umax);
    let (kv, h) = lattice(vmin, vmax);
    let cu = (ku + w as f64 * 0.5) * pitch;
    let cv = (kv + h as f64 * 0.5) * pitch;
    let eye = t * cu + b * cv + n * tri.vertices[0].position.dot(n);
    let camera = Camera::new(
        Lens::Orthographic {
            extent: h as f64 * pitch,
        },
        eye,
        -n,
        b,
        (w, h),
        -1.0,
        1.0,
    )
    .ok()?;
    debug_assert!((camera.right() - t).length() < 1e-9);
    Some(RasterConfig::from_camera(&camera, false))
}
