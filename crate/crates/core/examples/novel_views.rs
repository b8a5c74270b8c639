//! Builds one volume and renders it from an orbit with deferred shading,
//! splatting and ray casting. Images land in the given directory.
//!
//!     cargo run --release --example novel_views -- /tmp/orbit

use std::path::PathBuf;

use fhv::bench::{orbit_path, BenchError};
use fhv::raster::{CaptureStrategy, Execution, RasterConfig};
use fhv::raycast::{raycast_render, RaycastConfig, RaycastMode};
use fhv::reconstruct::{deferred_baseline, default_lights, splat_render, SplatConfig};
use fhv::scene::icosphere;
use fhv::volume::pofa_build;
use glam::DVec4;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "orbit".into()));
    std::fs::create_dir_all(&out)?;
    let scene = icosphere(3);
    let capture_res = 128;
    let (pofa, stats) = pofa_build(&scene, CaptureStrategy::NormalSpace, &RasterConfig::capture(capture_res)?, 6, Execution::Parallel)?;
    println!("captured {} fragments once", stats.fragments_emitted);

    let lights = default_lights();
    let rc = RaycastConfig::for_volume(&pofa, RaycastMode::OpaqueNearest);
    let splat = SplatConfig {
        exec: Execution::Parallel,
        ..SplatConfig::new(1.0 / capture_res as f64)
    };
    for (i, pose) in orbit_path(4, 7).iter().enumerate() {
        let camera = pose.camera((200, 200)).map_err(|e| BenchError::Load(e.to_string()))?;
        let (deferred, _) = deferred_baseline(&scene, &camera, &lights, DVec4::ZERO);
        let splatted = splat_render(&pofa.records, &scene.materials, &camera, &lights, &splat);
        let (cast, _) = raycast_render(&pofa, &scene.materials, &camera, &lights, &rc, Execution::Parallel);
        let agree = |img: &fhv::reconstruct::ImageBuffer| {
            let both: Vec<_> = (0..img.pixels.len())
                .filter_map(|k| Some((deferred.object_ids[k]?, img.object_ids[k]?)))
                .collect();
            both.iter().filter(|(a, b)| a == b).count() as f64 / both.len().max(1) as f64
        };
        for (name, img) in [("deferred", &deferred), ("splat", &splatted), ("raycast", &cast)] {
            img.write_ppm(&out.join(format!("{name}_{i}.ppm")))?;
        }
        println!(
            "view {i}: object ids agree with deferred on {:.1}% (splat) and {:.1}% (raycast)",
            100.0 * agree(&splatted),
            100.0 * agree(&cast)
        );
    }
    Ok(())
}
