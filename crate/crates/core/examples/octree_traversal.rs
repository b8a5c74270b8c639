//! Morton codes and front-to-back octree traversal on a small occupancy
//! pyramid.
//!
//!     cargo run --example octree_traversal

use std::ops::ControlFlow;

use fhv::raycast::{traverse_octree, Ray};
use fhv::volume::{morton_decode, morton_encode, OccupancyPyramid};
use glam::DVec3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let levels = 3;
    let code = morton_encode(5, 2, 7, levels)?;
    println!("cell (5, 2, 7) -> Morton {} -> {:?}", code.code, morton_decode(code));

    // a diagonal staircase of occupied cells
    let cells: Vec<u64> = (0..8).map(|i| morton_encode(i, i, i, levels).map(|m| m.code)).collect::<Result<_, _>>()?;
    let pyramid = OccupancyPyramid::from_leaves(levels, |m| cells.contains(&m));

    let ray = Ray::new(DVec3::splat(-0.5), DVec3::ONE, 0.0, f64::INFINITY)?;
    let visit = traverse_octree(&pyramid, &ray, &mut |leaf| {
        let [x, y, z] = morton_decode(fhv::volume::MortonCode { code: leaf.leaf, levels });
        println!("  leaf ({x}, {y}, {z}) t = [{:.3}, {:.3}]", leaf.t_entry, leaf.t_exit);
        ControlFlow::Continue(())
    });
    println!("{} leaves visited along the diagonal", visit.visited);
    Ok(())
}
