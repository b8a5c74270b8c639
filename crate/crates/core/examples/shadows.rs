//! Transparency with and without shadow rays on the cornell box, written
//! as two PPM images.
//!
//!     cargo run --release --example shadows -- /tmp

use std::path::PathBuf;

use fhv::raster::{CaptureStrategy, Execution, RasterConfig};
use fhv::raycast::{raycast_render, RaycastConfig, RaycastMode};
use fhv::reconstruct::default_lights;
use fhv::scene::{cornell_box, Camera};
use fhv::volume::pofa_build;
use glam::DVec3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let scene = cornell_box();
    let (pofa, _) = pofa_build(&scene, CaptureStrategy::NormalSpace, &RasterConfig::capture(96)?, 6, Execution::Parallel)?;
    let camera = Camera::look_at(DVec3::new(0.5, 0.5, 2.2), DVec3::splat(0.5), DVec3::Y, 0.7, (160, 160))?;
    let lights = default_lights();

    for mode in [RaycastMode::Transparency, RaycastMode::TransparencyShadows] {
        let cfg = RaycastConfig::for_volume(&pofa, mode);
        let (img, stats) = raycast_render(&pofa, &scene.materials, &camera, &lights, &cfg, Execution::Parallel);
        let mean = img.pixels.iter().map(|p| p.truncate().element_sum() / 3.0).sum::<f64>() / img.pixels.len() as f64;
        let path = out.join(format!("cornell_{}.ppm", mode.label()));
        img.write_ppm(&path)?;
        println!("{:<3} mean brightness {mean:.4}, {} shadow rays -> {}", mode.label(), stats.shadow_rays, path.display());
    }
    Ok(())
}
