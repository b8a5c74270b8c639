//! Deterministic software rasterizer.
//!
//! Vertices are snapped to a fixed-point grid with [`SUBPIXEL_BITS`] of
//! sub-pixel precision and coverage is decided with exact integer edge
//! functions sampled at pixel centers. Ties on an edge go to the triangle
//! for which that edge is a top or left edge, so triangles sharing an edge
//! never both emit a fragment for the same pixel.

mod capture;

use glam::{DMat3, DMat4, DVec3, DVec4};
use thiserror::Error;

use crate::scene::{Camera, Triangle};

pub use capture::{
    capture_camera_for, capture_pass, capture_pass_with, CaptureStats, CaptureStrategy, Execution,
    FragmentSink,
};

pub const SUBPIXEL_BITS: u32 = 8;
const SUBPIXEL: i64 = 1 << SUBPIXEL_BITS;
const HALF_PIXEL: i64 = SUBPIXEL / 2;

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("normal has zero length")]
    ZeroNormal,
    #[error("operation requires an orthographic projection")]
    NotOrthographic,
    #[error("resolution must be between 1 and {max}", max = MAX_RESOLUTION)]
    Resolution,
}

pub const MAX_RESOLUTION: u32 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RasterConfig {
    pub width: u32,
    pub height: u32,
    /// World to clip transform; clip depth in `0..1`.
    pub projection: DMat4,
    /// Drop fragments outside the depth range and clip against the near
    /// plane. Capture passes leave this off.
    pub depth_clip: bool,
}

impl RasterConfig {
    pub fn from_camera(camera: &Camera, depth_clip: bool) -> Self {
        Self {
            width: camera.width,
            height: camera.height,
            projection: camera.clip_from_world(),
            depth_clip,
        }
    }

    /// Square orthographic capture of the unit cube looking down -z.
    pub fn capture(resolution: u32) -> Result<Self, RasterError> {
        if resolution == 0 || resolution > MAX_RESOLUTION {
            return Err(RasterError::Resolution);
        }
        let camera = Camera::new(
            crate::scene::Lens::Orthographic { extent: 1.0 },
            DVec3::splat(0.5),
            DVec3::NEG_Z,
            DVec3::Y,
            (resolution, resolution),
            -1.0,
            1.0,
        )
        .expect("valid capture camera");
        Ok(Self::from_camera(&camera, false))
    }

    pub fn is_orthographic(&self) -> bool {
        self.projection.row(3) == DVec4::W
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmittedFragment {
    pub raster_xy: (u32, u32),
    pub world_position: DVec3,
    pub world_normal: DVec3,
    pub depth: f64,
    pub material_id: u32,
    pub object_id: u32,
}

/// World-space size of one capture pixel.
pub fn world_pixel_footprint(cfg: &RasterConfig) -> Result<f64, RasterError> {
    if !cfg.is_orthographic() {
        return Err(RasterError::NotOrthographic);
    }
    let row = cfg.projection.row(0).truncate();
    Ok(2.0 / (row.length() * cfg.width as f64))
}

/// Orthonormal frame whose rows are tangent, bitangent and `n`, with
/// `tangent x bitangent = n`.
pub fn tangent_basis(n: DVec3) -> Result<DMat3, RasterError> {
    let len = n.length();
    if !(len > 0.0) || !len.is_finite() {
        return Err(RasterError::ZeroNormal);
    }
    let n = n / len;
    // branchless construction of Duff et al. (2017)
    let sign = 1f64.copysign(n.z);
    let a = -1.0 / (sign + n.z);
    let b = n.x * n.y * a;
    let tangent = DVec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
    let bitangent = DVec3::new(b, sign + n.y * n.y * a, -n.y);
    Ok(DMat3::from_cols(tangent, bitangent, n).transpose())
}

#[derive(Clone, Copy)]
struct ClipVertex {
    clip: DVec4,
    position: DVec3,
    normal: DVec3,
}

impl ClipVertex {
    fn lerp(&self, other: &ClipVertex, t: f64) -> ClipVertex {
        ClipVertex {
            clip: self.clip.lerp(other.clip, t),
            position: self.position.lerp(other.position, t),
            normal: self.normal.lerp(other.normal, t),
        }
    }
}

/// Rasterizes one triangle and hands every covered pixel-center sample to
/// `sink`. Returns the number of fragments emitted.
pub fn rasterize_triangle<F>(tri: &Triangle, cfg: &RasterConfig, mut sink: F) -> usize
where
    F: FnMut(&EmittedFragment),
{
    if tri.is_degenerate() {
        return 0;
    }
    let verts = tri.vertices.map(|v| ClipVertex {
        clip: cfg.projection * v.position.extend(1.0),
        position: v.position,
        normal: v.normal,
    });
    if !cfg.depth_clip {
        return raster_clipped(&verts, tri, cfg, &mut sink);
    }
    // Sutherland-Hodgman against clip z >= 0 (the near plane).
    let mut poly: Vec<ClipVertex> = Vec::with_capacity(4);
    for i in 0..3 {
        let (a, b) = (&verts[i], &verts[(i + 1) % 3]);
        let (da, db) = (a.clip.z, b.clip.z);
        if da >= 0.0 {
            poly.push(*a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            poly.push(a.lerp(b, da / (da - db)));
        }
    }
    let mut count = 0;
    for k in 1..poly.len().saturating_sub(1) {
        count += raster_clipped(&[poly[0], poly[k], poly[k + 1]], tri, cfg, &mut sink);
    }
    count
}

fn raster_clipped<F>(verts: &[ClipVertex; 3], tri: &Triangle, cfg: &RasterConfig, sink: &mut F) -> usize
where
    F: FnMut(&EmittedFragment),
{
    let (w, h) = (cfg.width as f64, cfg.height as f64);
    let mut screen = [(0i64, 0i64); 3];
    let mut inv_w = [0.0; 3];
    let mut z_ndc = [0.0; 3];
    for (i, v) in verts.iter().enumerate() {
        if !(v.clip.w > 0.0) {
            return 0;
        }
        inv_w[i] = 1.0 / v.clip.w;
        let sx = (v.clip.x * inv_w[i] + 1.0) * 0.5 * w;
        let sy = (1.0 - v.clip.y * inv_w[i]) * 0.5 * h;
        if !(sx.abs() < 1e12 && sy.abs() < 1e12) {
            return 0;
        }
        screen[i] = (snap(sx), snap(sy));
        z_ndc[i] = v.clip.z * inv_w[i];
    }

    let mut order = [0usize, 1, 2];
    let mut area2 = edge(screen[0], screen[1], screen[2]);
    if area2 == 0 {
        return 0;
    }
    if area2 < 0 {
        order.swap(1, 2);
        area2 = -area2;
    }
    let p = order.map(|i| screen[i]);

    let min_x = p.iter().map(|v| v.0).min().unwrap();
    let max_x = p.iter().map(|v| v.0).max().unwrap();
    let min_y = p.iter().map(|v| v.1).min().unwrap();
    let max_y = p.iter().map(|v| v.1).max().unwrap();
    let x0 = div_ceil(min_x - HALF_PIXEL, SUBPIXEL).max(0);
    let x1 = (max_x - HALF_PIXEL).div_euclid(SUBPIXEL).min(cfg.width as i64 - 1);
    let y0 = div_ceil(min_y - HALF_PIXEL, SUBPIXEL).max(0);
    let y1 = (max_y - HALF_PIXEL).div_euclid(SUBPIXEL).min(cfg.height as i64 - 1);
    if x0 > x1 || y0 > y1 {
        return 0;
    }

    // edge k is opposite vertex k, so its value is vertex k's weight
    let edges = [(p[1], p[2]), (p[2], p[0]), (p[0], p[1])];
    let bias = edges.map(|(a, b)| if is_top_left(a, b) { 0 } else { 1 });
    let step_x = edges.map(|(a, b)| -((b.1 - a.1) as i128) * SUBPIXEL as i128);
    let step_y = edges.map(|(a, b)| ((b.0 - a.0) as i128) * SUBPIXEL as i128);
    let origin = (x0 * SUBPIXEL + HALF_PIXEL, y0 * SUBPIXEL + HALF_PIXEL);
    let mut row = edges.map(|(a, b)| edge(a, b, origin));

    let area = area2 as f64;
    let attrs = order.map(|i| &verts[i]);
    let inv_w = order.map(|i| inv_w[i]);
    let z_ndc = order.map(|i| z_ndc[i]);
    let mut emitted = 0;
    for y in y0..=y1 {
        let mut e = row;
        for x in x0..=x1 {
            if e[0] >= bias[0] && e[1] >= bias[1] && e[2] >= bias[2] {
                let b = e.map(|v| v as f64 / area);
                let depth = b[0] * z_ndc[0] + b[1] * z_ndc[1] + b[2] * z_ndc[2];
                if !cfg.depth_clip || (0.0..=1.0).contains(&depth) {
                    // perspective-correct weights
                    let pw = [b[0] * inv_w[0], b[1] * inv_w[1], b[2] * inv_w[2]];
                    let norm = 1.0 / (pw[0] + pw[1] + pw[2]);
                    let wt = pw.map(|v| v * norm);
                    let position = attrs[0].position * wt[0]
                        + attrs[1].position * wt[1]
                        + attrs[2].position * wt[2];
                    let normal = (attrs[0].normal * wt[0]
                        + attrs[1].normal * wt[1]
                        + attrs[2].normal * wt[2])
                        .try_normalize()
                        .unwrap_or(tri.face_normal);
                    sink(&EmittedFragment {
                        raster_xy: (x as u32, y as u32),
                        world_position: position,
                        world_normal: normal,
                        depth,
                        material_id: tri.material_id,
                        object_id: tri.object_id,
                    });
                    emitted += 1;
                }
            }
            for k in 0..3 {
                e[k] += step_x[k];
            }
        }
        for k in 0..3 {
            row[k] += step_y[k];
        }
    }
    emitted
}

fn snap(v: f64) -> i64 {
    (v * SUBPIXEL as f64).round() as i64
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// Twice the signed area of (a, b, p); positive when p is on the interior
/// side of a consistently oriented edge in y-down raster space.
fn edge(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> i128 {
    (b.0 - a.0) as i128 * (p.1 - a.1) as i128 - (b.1 - a.1) as i128 * (p.0 - a.0) as i128
}

fn is_top_left(a: (i64, i64), b: (i64, i64)) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    dy < 0 || (dy == 0 && dx > 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Triangle, Vertex};
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn collect(tri: &Triangle, cfg: &RasterConfig) -> Vec<EmittedFragment> {
        let mut out = Vec::new();
        let n = rasterize_triangle(tri, cfg, |f| out.push(*f));
        assert_eq!(n, out.len());
        out
    }

    /// Coverage oracle: snapped vertices, every pixel center tested with a
    /// barycentric sign test and the top-left rule spelled out per edge.
    fn coverage_oracle(tri: &Triangle, cfg: &RasterConfig) -> HashSet<(u32, u32)> {
        let s = tri.positions().map(|p| {
            let c = cfg.projection * p.extend(1.0);
            let sx = (c.x / c.w + 1.0) * 0.5 * cfg.width as f64;
            let sy = (1.0 - c.y / c.w) * 0.5 * cfg.height as f64;
            ((sx * 256.0).round() as i128, (sy * 256.0).round() as i128)
        });
        let cross = |o: (i128, i128), a: (i128, i128), b: (i128, i128)| {
            (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
        };
        let orient = cross(s[0], s[1], s[2]).signum();
        let mut set = HashSet::new();
        if orient == 0 {
            return set;
        }
        for j in 0..cfg.height {
            for i in 0..cfg.width {
                let p = (i as i128 * 256 + 128, j as i128 * 256 + 128);
                let inside = (0..3).all(|k| {
                    let (a, b) = if orient > 0 {
                        (s[k], s[(k + 1) % 3])
                    } else {
                        (s[(k + 1) % 3], s[k])
                    };
                    let v = cross(a, b, p);
                    let owns_tie = (b.1 < a.1) || (b.1 == a.1 && b.0 > a.0);
                    v > 0 || (v == 0 && owns_tie)
                });
                if inside {
                    set.insert((i, j));
                }
            }
        }
        set
    }

    fn flat(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Triangle {
        Triangle::flat([a.into(), b.into(), c.into()], 0, 0)
    }

    #[test]
    fn degenerate_triangle_emits_nothing() {
        let cfg = RasterConfig::capture(8).unwrap();
        let t = flat([0.1, 0.1, 0.5], [0.5, 0.5, 0.5], [0.9, 0.9, 0.5]);
        assert_eq!(collect(&t, &cfg).len(), 0);
    }

    #[test]
    fn viewport_quad_covers_every_pixel_once() {
        for n in [1, 7, 8, 32] {
            let cfg = RasterConfig::capture(n).unwrap();
            let a = flat([0.0, 0.0, 0.5], [1.0, 0.0, 0.5], [1.0, 1.0, 0.5]);
            let b = flat([0.0, 0.0, 0.5], [1.0, 1.0, 0.5], [0.0, 1.0, 0.5]);
            let mut seen = HashSet::new();
            for t in [a, b] {
                for f in collect(&t, &cfg) {
                    assert!(seen.insert(f.raster_xy), "pixel emitted twice");
                }
            }
            assert_eq!(seen.len(), (n * n) as usize);
        }
    }

    #[test]
    fn lower_left_right_triangle_matches_oracle() {
        let cfg = RasterConfig::capture(8).unwrap();
        let t = flat([0.0, 0.0, 0.5], [1.0, 0.0, 0.5], [0.0, 1.0, 0.5]);
        let got: HashSet<_> = collect(&t, &cfg).iter().map(|f| f.raster_xy).collect();
        assert_eq!(got, coverage_oracle(&t, &cfg));
        // the diagonal passes through 8 pixel centers, all owned by this triangle's
        // hypotenuse only when it is a left edge; either way 28..=36 pixels
        assert!((28..=36).contains(&got.len()));
    }

    #[test]
    fn attributes_are_interpolated() {
        let cfg = RasterConfig::capture(16).unwrap();
        let t = Triangle::new(
            [
                Vertex::new(DVec3::new(0.1, 0.1, 0.2), DVec3::X),
                Vertex::new(DVec3::new(0.9, 0.1, 0.8), DVec3::Y),
                Vertex::new(DVec3::new(0.1, 0.9, 0.5), DVec3::Z),
            ],
            4,
            9,
        );
        for f in collect(&t, &cfg) {
            // world x,y equal the pixel center under an orthographic +z view, up to
            // the vertex snapping error
            let snap_err = 1.0 / (SUBPIXEL as f64 * 16.0);
            assert!((f.world_position.x - (f.raster_xy.0 as f64 + 0.5) / 16.0).abs() < snap_err);
            assert!((f.world_position.y - (1.0 - (f.raster_xy.1 as f64 + 0.5) / 16.0)).abs() < snap_err);
            assert!((f.world_normal.length() - 1.0).abs() < 1e-12);
            // depth is linear in the world z coordinate
            assert!((f.depth - (1.0 - (f.world_position.z - 0.5 + 1.0) / 2.0)).abs() < 1e-12);
            assert_eq!((f.material_id, f.object_id), (4, 9));
        }
    }

    #[test]
    fn footprint_examples() {
        assert_eq!(world_pixel_footprint(&RasterConfig::capture(1000).unwrap()), Ok(0.001));
        assert_eq!(world_pixel_footprint(&RasterConfig::capture(8).unwrap()), Ok(0.125));
        let cam = Camera::new(
            crate::scene::Lens::Orthographic { extent: 2.0 },
            DVec3::ZERO,
            DVec3::NEG_Z,
            DVec3::Y,
            (100, 100),
            -1.0,
            1.0,
        )
        .unwrap();
        let fp = world_pixel_footprint(&RasterConfig::from_camera(&cam, false)).unwrap();
        assert!((fp - 0.02).abs() < 1e-15);
        let persp = Camera::look_at(DVec3::Z, DVec3::ZERO, DVec3::Y, 1.0, (10, 10)).unwrap();
        assert_eq!(
            world_pixel_footprint(&RasterConfig::from_camera(&persp, true)),
            Err(RasterError::NotOrthographic)
        );
    }

    #[test]
    fn tangent_basis_examples() {
        let m = tangent_basis(DVec3::Z).unwrap();
        assert_eq!(m.row(0), DVec3::X);
        assert_eq!(m.row(1), DVec3::Y);
        assert_eq!(m.row(2), DVec3::Z);
        let m = tangent_basis(DVec3::NEG_Z).unwrap();
        assert_eq!(m.row(2), DVec3::NEG_Z);
        assert!((m.row(0).cross(m.row(1)) - m.row(2)).length() < 1e-15);
        assert_eq!(tangent_basis(DVec3::ZERO), Err(RasterError::ZeroNormal));
    }

    #[test]
    fn tangent_basis_is_orthonormal_for_sampled_normals() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = loop {
                let v = DVec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                if v.length() > 0.1 {
                    break v.normalize();
                }
            };
            let m = tangent_basis(n).unwrap();
            let id = m.transpose() * m;
            assert!(id.abs_diff_eq(DMat3::IDENTITY, 1e-6));
            assert!((m.row(2) - n).length() < 1e-12);
            assert!((m.row(0).cross(m.row(1)) - n).length() < 1e-6);
            assert_eq!(tangent_basis(n).unwrap(), m);
        }
    }

    #[test]
    fn near_plane_clips_perspective_triangles() {
        let cam = Camera::look_at(DVec3::new(0.5, 0.5, 2.0), DVec3::splat(0.5), DVec3::Y, 1.2, (32, 32)).unwrap();
        let cfg = RasterConfig::from_camera(&cam, true);
        // one vertex behind the eye
        let t = flat([0.2, 0.2, 0.5], [0.8, 0.2, 0.5], [0.5, 0.5, 3.0]);
        let frags = collect(&t, &cfg);
        assert!(!frags.is_empty());
        for f in frags {
            assert!((0.0..=1.0).contains(&f.depth));
            assert!(cam.view_depth(f.world_position) > 0.0);
        }
    }

    proptest! {
        #[test]
        fn rasterizer_matches_coverage_oracle(
            coords in prop::array::uniform9(-0.2f64..1.2),
            res in 1u32..24,
        ) {
            let cfg = RasterConfig::capture(res).unwrap();
            let t = flat(
                [coords[0], coords[1], coords[2]],
                [coords[3], coords[4], coords[5]],
                [coords[6], coords[7], coords[8]],
            );
            let frags = collect(&t, &cfg);
            let got: HashSet<_> = frags.iter().map(|f| f.raster_xy).collect();
            prop_assert_eq!(got.len(), frags.len());
            prop_assert_eq!(got, coverage_oracle(&t, &cfg));
        }

        #[test]
        fn shared_edges_emit_once(
            coords in prop::array::uniform8(0.0f64..1.0),
            res in 1u32..24,
        ) {
            // two triangles sharing the edge (p0, p1), on opposite sides of it
            let cfg = RasterConfig::capture(res).unwrap();
            let p = |i: usize| [coords[2 * i], coords[2 * i + 1], 0.5];
            let side = |q: [f64; 3]| {
                let (a, b) = (p(0), p(1));
                (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])
            };
            prop_assume!(side(p(2)) * side(p(3)) < 0.0);
            let a = flat(p(0), p(1), p(2));
            let b = flat(p(1), p(0), p(3));
            let mut seen = HashSet::new();
            for t in [a, b] {
                for f in collect(&t, &cfg) {
                    prop_assert!(seen.insert(f.raster_xy), "pixel {:?} emitted twice", f.raster_xy);
                }
            }
        }
    }
}
