use glam::DVec4;
use rayon::prelude::*;

use super::{premultiply, composite_over, shade_lights, ImageBuffer, Light};
use crate::raster::Execution;
use crate::scene::{Camera, Material};
use crate::volume::FragmentRecord;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplatConfig {
    /// World-space half size of every splat.
    pub radius: f64,
    pub background: DVec4,
    pub exec: Execution,
}

impl SplatConfig {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            background: DVec4::ZERO,
            exec: Execution::Sequential,
        }
    }
}

const EMPTY: u32 = u32::MAX;

/// Nearest fragment per pixel; equal depths keep the lower pool index.
#[derive(Clone)]
struct ZBuffer {
    width: u32,
    height: u32,
    cells: Vec<(f64, u32)>,
}

impl ZBuffer {
    fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            cells: vec![(f64::INFINITY, EMPTY); width as usize * height as usize],
        }
    }

    fn offer_cell(cell: &mut (f64, u32), depth: f64, index: u32) {
        if (depth, index) < *cell || cell.1 == EMPTY {
            *cell = (depth, index);
        }
    }

    fn splat(&mut self, camera: &Camera, radius: f64, index: u32, record: &FragmentRecord) {
        let Some((sx, sy, depth)) = camera.project(record.position()) else {
            return;
        };
        if !(camera.near..=camera.far).contains(&depth) || !sx.is_finite() || !sy.is_finite() {
            return;
        }
        let half = (radius / camera.pixel_size_at(depth)).max(0.5);
        // pixel centers inside the half-open square [s - half, s + half)
        let span = |s: f64, n: u32| {
            let lo = (s - half - 0.5).ceil().max(0.0);
            let hi = ((s + half - 0.5).ceil() - 1.0).min(n as f64 - 1.0);
            (lo as i64, hi as i64)
        };
        let (x0, x1) = span(sx, self.width);
        let (y0, y1) = span(sy, self.height);
        for y in y0..=y1 {
            let row = y as usize * self.width as usize;
            for x in x0..=x1 {
                Self::offer_cell(&mut self.cells[row + x as usize], depth, index);
            }
        }
    }

    fn merge(mut self, other: ZBuffer) -> ZBuffer {
        for (a, b) in self.cells.iter_mut().zip(other.cells) {
            if b.1 != EMPTY {
                Self::offer_cell(a, b.0, b.1);
            }
        }
        self
    }
}

/// Renders every fragment as a screen-aligned square covering at least one
/// pixel, keeps the nearest per pixel and shades it as an opaque surface.
pub fn splat_render(
    fragments: &[FragmentRecord],
    materials: &[Material],
    camera: &Camera,
    lights: &[Light],
    cfg: &SplatConfig,
) -> ImageBuffer {
    let (w, h) = (camera.width, camera.height);
    let zbuf = match cfg.exec {
        Execution::Sequential => {
            let mut z = ZBuffer::new(w, h);
            for (i, r) in fragments.iter().enumerate() {
                z.splat(camera, cfg.radius, i as u32, r);
            }
            z
        }
        Execution::Parallel => {
            let chunk = (fragments.len() / (4 * rayon::current_num_threads())).max(4096);
            fragments
                .par_chunks(chunk)
                .enumerate()
                .map(|(c, part)| {
                    let mut z = ZBuffer::new(w, h);
                    for (k, r) in part.iter().enumerate() {
                        z.splat(camera, cfg.radius, (c * chunk + k) as u32, r);
                    }
                    z
                })
                .reduce(|| ZBuffer::new(w, h), ZBuffer::merge)
        }
    };

    let fallback = Material::default();
    let mut img = ImageBuffer::new(w, h, cfg.background);
    let shaded: Vec<_> = zbuf
        .cells
        .par_iter()
        .map(|&(depth, idx)| {
            (idx != EMPTY).then(|| {
                let r = &fragments[idx as usize];
                let p = r.position();
                let m = materials.get(r.material_id as usize).unwrap_or(&fallback);
                let rgb = shade_lights(p, r.normal(), m, lights, camera.to_eye(p), |_| 1.0);
                (composite_over(premultiply(rgb, 1.0), cfg.background), depth, r.object_id)
            })
        })
        .collect();
    for (i, s) in shaded.into_iter().enumerate() {
        if let Some((rgba, depth, object)) = s {
            img.pixels[i] = rgba;
            img.depth[i] = depth;
            img.object_ids[i] = Some(object);
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::EmittedFragment;
    use crate::scene::{Axis, Lens};
    use glam::DVec3;

    fn record(p: DVec3, material: u32, object: u32) -> FragmentRecord {
        FragmentRecord::from_emitted(
            &EmittedFragment {
                raster_xy: (0, 0),
                world_position: p,
                world_normal: DVec3::Z,
                depth: 0.0,
                material_id: material,
                object_id: object,
            },
            -1,
        )
    }

    fn camera(res: u32) -> Camera {
        Camera::new(
            Lens::Orthographic { extent: 1.0 },
            DVec3::splat(0.5),
            -Axis::Z.unit(),
            DVec3::Y,
            (res, res),
            -1.0,
            1.0,
        )
        .unwrap()
    }

    fn materials() -> Vec<Material> {
        vec![Material::diffuse(DVec3::X), Material::diffuse(DVec3::Y)]
    }

    fn lights() -> Vec<Light> {
        vec![Light::directional(DVec3::Z, DVec3::ONE, DVec3::ZERO).unwrap()]
    }

    #[test]
    fn single_fragment_at_center() {
        let cam = camera(9);
        let frags = [record(DVec3::new(0.5, 0.5, 0.75), 0, 7)];
        let img = splat_render(&frags, &materials(), &cam, &lights(), &SplatConfig::new(1e-6));
        assert_eq!(img.covered(), 1);
        assert_eq!(img.object_id(4, 4), Some(7));
        assert_eq!(img.pixel(4, 4), DVec4::new(1.0, 0.0, 0.0, 1.0));
        assert!((img.depth[img.index(4, 4)] - cam.view_depth(frags[0].position())).abs() < 1e-12);
    }

    #[test]
    fn nearer_fragment_wins() {
        let cam = camera(8);
        let far = record(DVec3::new(0.3, 0.3, 0.2), 0, 1);
        let near = record(DVec3::new(0.3, 0.3, 0.8), 1, 2);
        for frags in [[far, near], [near, far]] {
            let img = splat_render(&frags, &materials(), &cam, &lights(), &SplatConfig::new(0.01));
            assert_eq!(img.covered(), 1);
            assert!(img.object_ids.contains(&Some(2)));
        }
    }

    #[test]
    fn equal_depth_keeps_first() {
        let cam = camera(8);
        let a = record(DVec3::new(0.3, 0.3, 0.5), 0, 1);
        let b = record(DVec3::new(0.3, 0.3, 0.5), 1, 2);
        let img = splat_render(&[a, b], &materials(), &cam, &lights(), &SplatConfig::new(0.01));
        assert!(img.object_ids.contains(&Some(1)) && !img.object_ids.contains(&Some(2)));
    }

    #[test]
    fn splat_size_follows_radius() {
        let cam = camera(16);
        let frags = [record(DVec3::new(0.5, 0.5, 0.5), 0, 0)];
        // radius of 1.5 pixels -> a 3x3 block around the pixel corner at 8,8
        let img = splat_render(&frags, &materials(), &cam, &lights(), &SplatConfig::new(1.5 / 16.0));
        assert_eq!(img.covered(), 9);
    }

    #[test]
    fn empty_pool_is_background() {
        let bg = DVec4::new(0.1, 0.2, 0.3, 1.0);
        let cfg = SplatConfig {
            background: bg,
            ..SplatConfig::new(0.01)
        };
        let img = splat_render(&[], &materials(), &camera(4), &lights(), &cfg);
        assert!(img.pixels.iter().all(|p| *p == bg));
    }

    #[test]
    fn every_projected_fragment_colors_a_pixel() {
        let cam = camera(13);
        let mut frags = Vec::new();
        for i in 0..200 {
            let t = i as f64 / 200.0;
            frags.push(record(DVec3::new(t, (t * 7.3).fract(), (t * 3.1).fract()), 0, i));
        }
        let img = splat_render(&frags, &materials(), &cam, &lights(), &SplatConfig::new(1e-9));
        for (i, f) in frags.iter().enumerate() {
            let (sx, sy, _) = cam.project(f.position()).unwrap();
            if (0.0..13.0).contains(&sx) && (0.0..13.0).contains(&sy) {
                let (px, py) = ((sx - 1.0).ceil() as u32, (sy - 1.0).ceil() as u32);
                // the covering pixel holds this fragment or a nearer one
                let d = img.depth[img.index(px, py)];
                assert!(d <= cam.view_depth(f.position()), "fragment {i}");
            }
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let cam = camera(32);
        let frags: Vec<_> = (0..20_000)
            .map(|i| {
                let t = i as f64 / 20_000.0;
                record(DVec3::new((t * 17.0).fract(), (t * 29.0).fract(), (t * 5.0).fract()), i % 2, i)
            })
            .collect();
        let seq = splat_render(&frags, &materials(), &cam, &lights(), &SplatConfig::new(0.02));
        let par = splat_render(
            &frags,
            &materials(),
            &cam,
            &lights(),
            &SplatConfig {
                exec: Execution::Parallel,
                ..SplatConfig::new(0.02)
            },
        );
        assert_eq!(seq, par);
    }
}
