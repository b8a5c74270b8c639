use glam::{DVec3, DVec4};
use rayon::prelude::*;

use super::{composite_over, premultiply, shade_lights, ImageBuffer, Light};
use crate::raster::{rasterize_triangle, RasterConfig};
use crate::scene::{Camera, Scene};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GBufferTexel {
    pub position: DVec3,
    pub normal: DVec3,
    pub material_id: u32,
    pub object_id: u32,
    /// Clip-space depth in `0..1`.
    pub depth: f64,
    pub valid: bool,
}

impl GBufferTexel {
    const INVALID: Self = Self {
        position: DVec3::ZERO,
        normal: DVec3::ZERO,
        material_id: 0,
        object_id: 0,
        depth: f64::INFINITY,
        valid: false,
    };
}

#[derive(Clone, Debug, PartialEq)]
pub struct GBuffer {
    pub width: u32,
    pub height: u32,
    pub texels: Vec<GBufferTexel>,
}

impl GBuffer {
    pub fn texel(&self, x: u32, y: u32) -> &GBufferTexel {
        &self.texels[y as usize * self.width as usize + x as usize]
    }

    pub fn valid_count(&self) -> usize {
        self.texels.iter().filter(|t| t.valid).count()
    }
}

/// Rasterizes the scene with a depth test, keeping the nearest fragment of
/// every pixel.
pub fn geometry_pass(scene: &Scene, camera: &Camera) -> GBuffer {
    let cfg = RasterConfig::from_camera(camera, true);
    let mut gbuf = GBuffer {
        width: camera.width,
        height: camera.height,
        texels: vec![GBufferTexel::INVALID; camera.width as usize * camera.height as usize],
    };
    for tri in &scene.triangles {
        rasterize_triangle(tri, &cfg, |f| {
            let (x, y) = f.raster_xy;
            let t = &mut gbuf.texels[y as usize * camera.width as usize + x as usize];
            if f.depth < t.depth {
                *t = GBufferTexel {
                    position: f.world_position,
                    normal: f.world_normal,
                    material_id: f.material_id,
                    object_id: f.object_id,
                    depth: f.depth,
                    valid: true,
                };
            }
        });
    }
    gbuf
}

/// Shades every valid texel once.
pub fn lighting_pass(gbuf: &GBuffer, scene: &Scene, camera: &Camera, lights: &[Light], background: DVec4) -> ImageBuffer {
    let mut img = ImageBuffer::new(gbuf.width, gbuf.height, background);
    let lit: Vec<_> = gbuf
        .texels
        .par_iter()
        .map(|t| {
            t.valid.then(|| {
                let m = scene.material(t.material_id);
                let rgb = shade_lights(t.position, t.normal, m, lights, camera.to_eye(t.position), |_| 1.0);
                composite_over(premultiply(rgb, 1.0), background)
            })
        })
        .collect();
    for (i, (rgba, t)) in lit.into_iter().zip(&gbuf.texels).enumerate() {
        if let Some(rgba) = rgba {
            img.pixels[i] = rgba;
            img.depth[i] = camera.view_depth(t.position);
            img.object_ids[i] = Some(t.object_id);
        }
    }
    img
}

/// Deferred shading: [`geometry_pass`] followed by [`lighting_pass`].
pub fn deferred_baseline(scene: &Scene, camera: &Camera, lights: &[Light], background: DVec4) -> (ImageBuffer, GBuffer) {
    let gbuf = geometry_pass(scene, camera);
    (lighting_pass(&gbuf, scene, camera, lights, background), gbuf)
}
