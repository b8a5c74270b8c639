//! Image-order reconstruction by casting rays through an octree volume.

mod traverse;

use std::ops::ControlFlow;

use glam::{DVec3, DVec4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::Execution;
use crate::reconstruct::{composite_over, front_to_back_accumulate, shade_lights, ImageBuffer, Light};
use crate::scene::{Camera, Lens, Material};
use crate::volume::{leaf_of, FragmentRecord, OctreeVolume};

pub use traverse::{box_interval, traverse_octree, LeafVisit, Traversal};

#[derive(Debug, Error, PartialEq)]
pub enum RayError {
    #[error("ray direction has zero length")]
    ZeroDirection,
    #[error("empty ray range {t_min}..{t_max}")]
    EmptyRange { t_min: f64, t_max: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: DVec3,
    /// Unit length.
    pub direction: DVec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    pub fn new(origin: DVec3, direction: DVec3, t_min: f64, t_max: f64) -> Result<Self, RayError> {
        let direction = direction.try_normalize().ok_or(RayError::ZeroDirection)?;
        if !(t_min < t_max) {
            return Err(RayError::EmptyRange { t_min, t_max });
        }
        Ok(Self {
            origin,
            direction,
            t_min,
            t_max,
        })
    }

    pub fn at(&self, t: f64) -> DVec3 {
        self.origin + self.direction * t
    }
}

/// Ray through the continuous raster position `(sx, sy)` (pixel units, y
/// down). Orthographic rays start on the near plane.
pub fn ray_through(camera: &Camera, sx: f64, sy: f64) -> Ray {
    let nx = 2.0 * sx / camera.width as f64 - 1.0;
    let ny = 1.0 - 2.0 * sy / camera.height as f64;
    let (right, up, view) = (camera.right(), camera.up, camera.view_dir);
    match camera.lens {
        Lens::Orthographic { extent } => {
            let hh = extent * 0.5;
            let origin = camera.eye + right * (nx * hh * camera.aspect()) + up * (ny * hh) + view * camera.near;
            Ray {
                origin,
                direction: view,
                t_min: 0.0,
                t_max: camera.far - camera.near,
            }
        }
        Lens::Perspective { fov_y } => {
            let t = (fov_y * 0.5).tan();
            let dir = view + right * (nx * t * camera.aspect()) + up * (ny * t);
            Ray {
                origin: camera.eye,
                direction: dir.normalize(),
                t_min: 0.0,
                t_max: f64::INFINITY,
            }
        }
    }
}

/// Ray through the center of pixel `(x, y)`.
pub fn gen_primary_ray(camera: &Camera, (x, y): (u32, u32)) -> Ray {
    ray_through(camera, x as f64 + 0.5, y as f64 + 0.5)
}

/// Parameter of the closest approach of `ray` to the fragment, if that
/// point lies in range and within `radius` of the fragment.
pub fn intersect_fragment(ray: &Ray, frag: &FragmentRecord, radius: f64) -> Option<f64> {
    let rel = frag.position() - ray.origin;
    let t = rel.dot(ray.direction);
    if t < ray.t_min || t > ray.t_max {
        return None;
    }
    let perp = rel - ray.direction * t;
    (perp.length_squared() <= radius * radius).then_some(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaycastMode {
    /// Nearest hit only, drawn opaque.
    OpaqueNearest,
    /// All hits composited front to back with their material alpha.
    Transparency,
    /// As `Transparency`, with one shadow ray per light and hit.
    TransparencyShadows,
}

impl RaycastMode {
    pub const ALL: [RaycastMode; 3] = [Self::OpaqueNearest, Self::Transparency, Self::TransparencyShadows];

    pub fn label(self) -> &'static str {
        match self {
            Self::OpaqueNearest => "r",
            Self::Transparency => "rt",
            Self::TransparencyShadows => "rts",
        }
    }
}

impl std::str::FromStr for RaycastMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['/', '-', '_'], "").as_str() {
            "r" | "opaque" | "opaquenearest" => Ok(Self::OpaqueNearest),
            "rt" | "transparency" => Ok(Self::Transparency),
            "rts" | "shadows" | "transparencyshadows" => Ok(Self::TransparencyShadows),
            _ => Err(format!("unknown raycast mode {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaycastConfig {
    pub splat_radius_world: f64,
    /// Accumulated alpha at which a ray stops, checked after each leaf.
    pub alpha_cutoff: f64,
    pub mode: RaycastMode,
    pub shadow_epsilon: f64,
    pub early_termination: bool,
    pub background: DVec4,
}

/// Capture footprint over root two, but no more than half a leaf edge.
pub fn default_splat_radius(volume: &dyn OctreeVolume) -> f64 {
    (volume.capture_footprint() / std::f64::consts::SQRT_2).min(0.5 * volume.leaf_edge())
}

impl RaycastConfig {
    pub fn for_volume(volume: &dyn OctreeVolume, mode: RaycastMode) -> Self {
        Self::with_radius(default_splat_radius(volume), mode)
    }

    pub fn with_radius(radius: f64, mode: RaycastMode) -> Self {
        Self {
            splat_radius_world: radius,
            alpha_cutoff: 1.0,
            mode,
            shadow_epsilon: 2.0 * radius,
            early_termination: true,
            background: DVec4::ZERO,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HitRecord {
    pub t: f64,
    /// Pool index as reported by the volume.
    pub fragment: u32,
    pub leaf: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RayStats {
    pub visited_leaves: u64,
    pub tested_fragments: u64,
    pub hits: u64,
    pub shadow_rays: u64,
    pub terminated_early: bool,
}

/// Totals over a frame; `terminated_early` counts rays.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRayStats {
    pub rays: u64,
    pub visited_leaves: u64,
    pub tested_fragments: u64,
    pub hits: u64,
    pub shadow_rays: u64,
    pub terminated_early: u64,
}

impl FrameRayStats {
    fn add(mut self, s: &RayStats) -> Self {
        self.rays += 1;
        self.visited_leaves += s.visited_leaves;
        self.tested_fragments += s.tested_fragments;
        self.hits += s.hits;
        self.shadow_rays += s.shadow_rays;
        self.terminated_early += s.terminated_early as u64;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelSample {
    /// Premultiplied, composited over the background.
    pub rgba: DVec4,
    pub nearest: Option<HitRecord>,
    pub stats: RayStats,
}

/// The fragment a shadow ray starts from; fragments of the same object in
/// the same leaf are ignored to avoid self-shadowing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShadowOrigin {
    pub object_id: u32,
    pub leaf: u64,
}

fn material<'a>(materials: &'a [Material], id: u32, fallback: &'a Material) -> &'a Material {
    materials.get(id as usize).unwrap_or(fallback)
}

/// Fraction of `light` reaching `point`: the product of `1 - alpha` over
/// every fragment the shadow ray passes through.
pub fn shadow_transmittance(
    volume: &dyn OctreeVolume,
    materials: &[Material],
    point: DVec3,
    origin: Option<ShadowOrigin>,
    light: &Light,
    cfg: &RaycastConfig,
) -> f64 {
    let (l, dist) = light.incidence(point);
    let t_max = dist - cfg.shadow_epsilon;
    if !(t_max > 0.0) {
        return 1.0;
    }
    let ray = Ray {
        origin: point + l * cfg.shadow_epsilon,
        direction: l,
        t_min: 0.0,
        t_max,
    };
    let fallback = Material::default();
    let records = volume.records();
    let mut transmittance = 1.0;
    traverse_octree(volume.pyramid(), &ray, &mut |v| {
        volume.visit_leaf(v.leaf, &mut |idx, rec| {
            let own = origin.is_some_and(|o| o.object_id == rec.object_id && o.leaf == v.leaf);
            if !own && intersect_fragment(&ray, rec, cfg.splat_radius_world).is_some() {
                transmittance *= 1.0 - material(materials, records[idx as usize].material_id, &fallback).alpha;
            }
        });
        if transmittance <= 0.0 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    transmittance.max(0.0)
}

/// Shades the fragments along `ray` front to back.
pub fn raycast_pixel(
    volume: &dyn OctreeVolume,
    ray: &Ray,
    materials: &[Material],
    lights: &[Light],
    cfg: &RaycastConfig,
) -> PixelSample {
    let fallback = Material::default();
    let records = volume.records();
    let levels = volume.levels();
    let mut stats = RayStats::default();
    let mut acc = DVec4::ZERO;
    let mut nearest = None;
    let mut hits: Vec<HitRecord> = Vec::new();
    let to_eye = -ray.direction;

    let traversal = traverse_octree(volume.pyramid(), ray, &mut |v| {
        hits.clear();
        volume.visit_leaf(v.leaf, &mut |idx, rec| {
            stats.tested_fragments += 1;
            if let Some(t) = intersect_fragment(ray, rec, cfg.splat_radius_world) {
                let h = HitRecord { t, fragment: idx, leaf: v.leaf };
                // insertion sort by (t, index)
                let mut i = hits.len();
                hits.push(h);
                while i > 0 && (hits[i - 1].t, hits[i - 1].fragment) > (h.t, h.fragment) {
                    hits[i] = hits[i - 1];
                    i -= 1;
                }
                hits[i] = h;
            }
        });
        stats.hits += hits.len() as u64;
        for h in &hits {
            let rec = &records[h.fragment as usize];
            let m = material(materials, rec.material_id, &fallback);
            let p = rec.position();
            nearest.get_or_insert(*h);
            match cfg.mode {
                RaycastMode::OpaqueNearest => {
                    let rgb = shade_lights(p, rec.normal(), m, lights, to_eye, |_| 1.0);
                    acc = rgb.extend(1.0);
                    return ControlFlow::Break(());
                }
                RaycastMode::Transparency => {
                    let rgb = shade_lights(p, rec.normal(), m, lights, to_eye, |_| 1.0);
                    acc = front_to_back_accumulate(acc, rgb.extend(m.alpha));
                }
                RaycastMode::TransparencyShadows => {
                    let origin = ShadowOrigin {
                        object_id: rec.object_id,
                        leaf: leaf_of(p, levels),
                    };
                    let rgb = shade_lights(p, rec.normal(), m, lights, to_eye, |light| {
                        stats.shadow_rays += 1;
                        shadow_transmittance(volume, materials, p, Some(origin), light, cfg)
                    });
                    acc = front_to_back_accumulate(acc, rgb.extend(m.alpha));
                }
            }
        }
        if cfg.early_termination && acc.w >= cfg.alpha_cutoff {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    stats.visited_leaves = traversal.visited;
    stats.terminated_early = traversal.terminated;
    PixelSample {
        rgba: composite_over(acc, cfg.background),
        nearest,
        stats,
    }
}

/// Casts one ray per pixel of `camera`.
pub fn raycast_render(
    volume: &dyn OctreeVolume,
    materials: &[Material],
    camera: &Camera,
    lights: &[Light],
    cfg: &RaycastConfig,
    exec: Execution,
) -> (ImageBuffer, FrameRayStats) {
    let (w, h) = (camera.width, camera.height);
    let sample = |i: usize| {
        let (x, y) = ((i % w as usize) as u32, (i / w as usize) as u32);
        raycast_pixel(volume, &gen_primary_ray(camera, (x, y)), materials, lights, cfg)
    };
    let n = w as usize * h as usize;
    let samples: Vec<PixelSample> = match exec {
        Execution::Sequential => (0..n).map(sample).collect(),
        Execution::Parallel => (0..n).into_par_iter().map(sample).collect(),
    };
    let mut img = ImageBuffer::new(w, h, cfg.background);
    let mut stats = FrameRayStats::default();
    let records = volume.records();
    for (i, s) in samples.iter().enumerate() {
        img.pixels[i] = s.rgba;
        if let Some(hit) = s.nearest {
            let rec = &records[hit.fragment as usize];
            img.object_ids[i] = Some(rec.object_id);
            img.depth[i] = camera.view_depth(rec.position());
        }
        stats = stats.add(&s.stats);
    }
    (img, stats)
}
