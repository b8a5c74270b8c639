//! Ray casts the three translucent quads from the capture direction and
//! compares the triple-overlap pixel with the analytic composite.
//!
//!     cargo run --example transparency

use fhv::raster::{CaptureStrategy, Execution, RasterConfig};
use fhv::raycast::{raycast_render, RaycastConfig, RaycastMode};
use fhv::reconstruct::Light;
use fhv::scene::{capture_camera, three_quads, Axis};
use fhv::volume::pofa_build;
use glam::DVec3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = three_quads();
    let (pofa, _) = pofa_build(&scene, CaptureStrategy::NormalSpace, &RasterConfig::capture(64)?, 6, Execution::Sequential)?;
    let camera = capture_camera(&scene, Axis::Z, 64);
    // straight-on light with no ambient: every quad shades to its own color
    let lights = [Light::directional(DVec3::Z, DVec3::ONE, DVec3::ZERO)?];

    for mode in [RaycastMode::OpaqueNearest, RaycastMode::Transparency] {
        let cfg = RaycastConfig::for_volume(&pofa, mode);
        let (img, stats) = raycast_render(&pofa, &scene.materials, &camera, &lights, &cfg, Execution::Parallel);
        let p = img.pixel(32, 31);
        println!(
            "{:<3} overlap pixel rgba = ({:.4}, {:.4}, {:.4}, {:.4}), {} hits",
            mode.label(),
            p.x,
            p.y,
            p.z,
            p.w,
            stats.hits
        );
    }
    println!(
        "analytic          rgba = ({:.4}, {:.4}, {:.4}, {:.4})",
        1.0 / 3.0,
        2.0 / 9.0,
        4.0 / 27.0,
        19.0 / 27.0
    );
    Ok(())
}
