//! Fragment-history volumes.
//!
//! A scene is rasterized once into a view-independent set of surface
//! fragments, stored either per capture pixel or per octree leaf, and then
//! reconstructed from arbitrary cameras by splatting or by ray casting the
//! octree with transparency and shadows.
//!
//! ```
//! use fhv::raster::{CaptureStrategy, Execution, RasterConfig};
//! use fhv::scene::three_quads;
//! use fhv::volume::pofa_build;
//!
//! let scene = three_quads();
//! let cfg = RasterConfig::capture(64).unwrap();
//! let (pofa, stats) = pofa_build(&scene, CaptureStrategy::NormalSpace, &cfg, 4, Execution::Sequential).unwrap();
//! assert_eq!(pofa.records.len() as u64, stats.fragments_emitted);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod raster;
pub mod raycast;
pub mod reconstruct;
pub mod scene;
pub mod volume;
