//! Captures the three-quads scene into all three layouts and round-trips
//! the octree snapshot through a file.
//!
//!     cargo run --example build_volume

use fhv::raster::{CaptureStrategy, Execution, RasterConfig};
use fhv::scene::three_quads;
use fhv::volume::{pofa_build, pofl_build, ppfl_build, read_snapshot, write_snapshot, RecordLayout, Volume};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = three_quads();
    let cfg = RasterConfig::capture(64)?;

    let (ppfl, stats) = ppfl_build(&scene, CaptureStrategy::OneView(fhv::scene::Axis::Z), &cfg, 1 << 16, Execution::Sequential)?;
    let deepest = (0..64)
        .flat_map(|y| (0..64).map(move |x| (x, y)))
        .map(|(x, y)| ppfl.chain(x, y).count())
        .max()
        .unwrap_or(0);
    println!("PPFL  {:>6} fragments, deepest pixel holds {deepest}", stats.fragments_emitted);

    let (pofl, stats) = pofl_build(&scene, CaptureStrategy::NormalSpace, &cfg, 6, 1 << 16, Execution::Sequential)?;
    println!(
        "POFL  {:>6} fragments in {} occupied leaves",
        stats.fragments_emitted,
        pofl.pyramid.occupied_leaf_count()
    );

    let (pofa, stats) = pofa_build(&scene, CaptureStrategy::NormalSpace, &cfg, 6, Execution::Sequential)?;
    println!("POFA  {:>6} fragments, {} directory entries", stats.fragments_emitted, pofa.offsets.len());

    let dir = std::env::temp_dir().join("fhv-build-volume");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("three_quads.fhv");
    let volume = Volume::Pofa(pofa);
    write_snapshot(&path, &volume, RecordLayout::Packed36)?;
    let back = read_snapshot(&path)?;
    println!(
        "snapshot {} ({} bytes) reloads identically: {}",
        path.display(),
        std::fs::metadata(&path)?.len(),
        back == volume
    );
    Ok(())
}
