//! Fragment storage: the shared pool, the per-pixel and per-octant
//! directories built over it, memory accounting and binary snapshots.

mod memory;
mod morton;
mod octree;
mod pool;
mod ppfl;
mod pyramid;
mod snapshot;

use thiserror::Error;

use crate::raster::{CaptureStrategy, RasterError};

pub use memory::{
    memory_report, octant_count, LayoutKind, MemoryBreakdown, MemoryParams, DEFAULT_DEPTH_COMPLEXITY,
    DEFAULT_GBUFFER_PAYLOAD, POFA_OCTANT_BYTES, POFA_RECORD_BYTES, POFL_OCTANT_BYTES,
};
pub(crate) use morton::leaf_of;
pub use morton::{cell_of, morton_decode, morton_encode, node_bounds, MortonCode, MAX_MORTON_LEVELS};
pub use octree::{
    exclusive_prefix_sum, pofa_build, pofl_build, pofl_insert, rebuild_pofl_as_pofa, LeafHeads, OctreeVolume, Pofa,
    Pofl, PoflBuilder, DEFAULT_LEVELS, MAX_OCTREE_LEVELS,
};
pub use pool::{FragmentPool, FragmentRecord, PoolOverflow, PoolSummary, RecordLayout, NIL};
pub use ppfl::{ppfl_build, ppfl_insert, Chain, PixelDirectory, Ppfl, PpflBuilder};
pub use pyramid::{OccupancyPyramid, PyramidBuilder};
pub use snapshot::{decode, encode, read_snapshot, write_snapshot, SnapshotError, HEADER_BYTES, MAGIC};

#[derive(Debug, Error, PartialEq)]
pub enum VolumeError {
    #[error("octree depth {0} is out of range")]
    Levels(u32),
    #[error("cell coordinate {cell} does not fit in {levels} levels")]
    CellOutOfRange { cell: u32, levels: u32 },
    #[error("position is not finite")]
    NonFinite,
    #[error("counting pass found {counted} fragments but {written} were written")]
    CountMismatch { counted: u64, written: u64 },
    #[error("{0} fragments exceed the 32-bit index range")]
    TooManyFragments(u64),
    #[error("{} has no single capture grid to key a per-pixel layout on", .0.label())]
    ViewDependentLayout(CaptureStrategy),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// A frozen volume in any of the three layouts.
#[derive(Clone, Debug, PartialEq)]
pub enum Volume {
    Ppfl(Ppfl),
    Pofl(Pofl),
    Pofa(Pofa),
}

impl Volume {
    pub fn layout(&self) -> LayoutKind {
        match self {
            Volume::Ppfl(_) => LayoutKind::Ppfl,
            Volume::Pofl(_) => LayoutKind::Pofl,
            Volume::Pofa(_) => LayoutKind::Pofa,
        }
    }

    pub fn records(&self) -> &[FragmentRecord] {
        match self {
            Volume::Ppfl(v) => &v.records,
            Volume::Pofl(v) => &v.records,
            Volume::Pofa(v) => &v.records,
        }
    }

    pub fn pool(&self) -> PoolSummary {
        match self {
            Volume::Ppfl(v) => v.pool,
            Volume::Pofl(v) => v.pool,
            Volume::Pofa(v) => PoolSummary::exact(v.records.len() as u64),
        }
    }

    /// The octree view of this volume, if it has one.
    pub fn as_octree(&self) -> Option<&dyn OctreeVolume> {
        match self {
            Volume::Ppfl(_) => None,
            Volume::Pofl(v) => Some(v),
            Volume::Pofa(v) => Some(v),
        }
    }
}
