//! Octree layouts: per-octant linked lists (POFL) and per-octant contiguous
//! arrays (POFA), both keyed by the Morton index of the leaf cell.

use std::sync::atomic::{AtomicBool, AtomicI32, AtomicU32, Ordering};

use super::morton::leaf_of;
use super::pool::{FragmentPool, FragmentRecord, PoolOverflow, PoolSummary, NIL};
use super::ppfl::Chain;
use super::pyramid::{OccupancyPyramid, PyramidBuilder};
use super::VolumeError;
use crate::raster::{capture_pass_with, CaptureStats, CaptureStrategy, EmittedFragment, Execution, FragmentSink, RasterConfig};
use crate::scene::Scene;

/// Deepest octree the builders accept (`8^9` leaves).
pub const MAX_OCTREE_LEVELS: u32 = 9;

pub const DEFAULT_LEVELS: u32 = 6;

fn check_levels(levels: u32) -> Result<(), VolumeError> {
    if (1..=MAX_OCTREE_LEVELS).contains(&levels) {
        Ok(())
    } else {
        Err(VolumeError::Levels(levels))
    }
}

/// Read access shared by the two octree layouts.
pub trait OctreeVolume: Sync {
    fn levels(&self) -> u32;
    fn pyramid(&self) -> &OccupancyPyramid;
    fn records(&self) -> &[FragmentRecord];
    /// Capture resolution the volume was built at.
    fn capture_resolution(&self) -> u32;
    /// Calls `f` with the pool index and record of every fragment in `leaf`.
    fn visit_leaf(&self, leaf: u64, f: &mut dyn FnMut(u32, &FragmentRecord));

    fn leaf_edge(&self) -> f64 {
        1.0 / (1u64 << self.levels()) as f64
    }

    fn capture_footprint(&self) -> f64 {
        1.0 / self.capture_resolution() as f64
    }
}

pub struct LeafHeads {
    levels: u32,
    heads: Vec<AtomicI32>,
}

impl LeafHeads {
    pub fn new(levels: u32) -> Self {
        Self {
            levels,
            heads: (0..1usize << (3 * levels)).map(|_| AtomicI32::new(NIL)).collect(),
        }
    }
}

/// Appends `frag` to the list of the leaf containing its position and
/// marks the leaf's root path in the pyramid.
pub fn pofl_insert(
    dir: &LeafHeads,
    pyramid: &PyramidBuilder,
    pool: &FragmentPool,
    frag: &EmittedFragment,
) -> Result<u32, PoolOverflow> {
    let idx = pool.allocate()?;
    let record = FragmentRecord::from_emitted(frag, NIL);
    let leaf = leaf_of(record.position(), dir.levels);
    let prev = dir.heads[leaf as usize].swap(idx as i32, Ordering::AcqRel);
    pool.write(idx, FragmentRecord { prev_index: prev, ..record });
    pyramid.mark_leaf(leaf);
    Ok(idx)
}

pub struct PoflBuilder {
    pub heads: LeafHeads,
    pub pyramid: PyramidBuilder,
    pub pool: FragmentPool,
    resolution: u32,
}

impl PoflBuilder {
    pub fn new(levels: u32, capacity: usize, resolution: u32) -> Result<Self, VolumeError> {
        check_levels(levels)?;
        Ok(Self {
            heads: LeafHeads::new(levels),
            pyramid: PyramidBuilder::new(levels),
            pool: FragmentPool::with_capacity(capacity),
            resolution,
        })
    }

    pub fn freeze(self) -> Pofl {
        let (records, pool) = self.pool.freeze();
        Pofl {
            levels: self.heads.levels,
            resolution: self.resolution,
            heads: self.heads.heads.into_iter().map(AtomicI32::into_inner).collect(),
            pyramid: self.pyramid.freeze(),
            records,
            pool,
        }
    }
}

impl FragmentSink for PoflBuilder {
    fn emit(&self, fragment: &EmittedFragment) {
        let _ = pofl_insert(&self.heads, &self.pyramid, &self.pool, fragment);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pofl {
    pub levels: u32,
    pub resolution: u32,
    pub heads: Vec<i32>,
    pub pyramid: OccupancyPyramid,
    pub records: Vec<FragmentRecord>,
    pub pool: PoolSummary,
}

impl Pofl {
    /// Pool indices and records in `leaf`, newest first.
    pub fn chain(&self, leaf: u64) -> Chain<'_> {
        Chain {
            records: &self.records,
            next: self.heads[leaf as usize],
        }
    }
}

impl OctreeVolume for Pofl {
    fn levels(&self) -> u32 {
        self.levels
    }
    fn pyramid(&self) -> &OccupancyPyramid {
        &self.pyramid
    }
    fn records(&self) -> &[FragmentRecord] {
        &self.records
    }
    fn capture_resolution(&self) -> u32 {
        self.resolution
    }
    fn visit_leaf(&self, leaf: u64, f: &mut dyn FnMut(u32, &FragmentRecord)) {
        for (i, r) in self.chain(leaf) {
            f(i, r);
        }
    }
}

pub fn pofl_build(
    scene: &Scene,
    strategy: CaptureStrategy,
    cfg: &RasterConfig,
    levels: u32,
    capacity: usize,
    exec: Execution,
) -> Result<(Pofl, CaptureStats), VolumeError> {
    let builder = PoflBuilder::new(levels, capacity, cfg.width)?;
    let stats = capture_pass_with(scene, strategy, cfg, &builder, exec)?;
    Ok((builder.freeze(), stats))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pofa {
    pub levels: u32,
    pub resolution: u32,
    /// Exclusive prefix sum of `counts` in Morton order.
    pub offsets: Vec<u32>,
    pub counts: Vec<u32>,
    pub pyramid: OccupancyPyramid,
    pub records: Vec<FragmentRecord>,
}

impl Pofa {
    /// Assembles a POFA from per-leaf counts and fragments already grouped
    /// by leaf in Morton order.
    pub fn from_counts(levels: u32, resolution: u32, counts: Vec<u32>, records: Vec<FragmentRecord>) -> Result<Self, VolumeError> {
        check_levels(levels)?;
        let offsets = exclusive_prefix_sum(&counts)?;
        let total = offsets.last().zip(counts.last()).map_or(0, |(o, c)| *o as u64 + *c as u64);
        if total != records.len() as u64 {
            return Err(VolumeError::CountMismatch {
                counted: total,
                written: records.len() as u64,
            });
        }
        let pyramid = OccupancyPyramid::from_leaves(levels, |m| counts[m as usize] > 0);
        Ok(Self {
            levels,
            resolution,
            offsets,
            counts,
            pyramid,
            records,
        })
    }

    pub fn leaf_range(&self, leaf: u64) -> std::ops::Range<usize> {
        let start = self.offsets[leaf as usize] as usize;
        start..start + self.counts[leaf as usize] as usize
    }

    pub fn leaf(&self, leaf: u64) -> &[FragmentRecord] {
        &self.records[self.leaf_range(leaf)]
    }
}

impl OctreeVolume for Pofa {
    fn levels(&self) -> u32 {
        self.levels
    }
    fn pyramid(&self) -> &OccupancyPyramid {
        &self.pyramid
    }
    fn records(&self) -> &[FragmentRecord] {
        &self.records
    }
    fn capture_resolution(&self) -> u32 {
        self.resolution
    }
    fn visit_leaf(&self, leaf: u64, f: &mut dyn FnMut(u32, &FragmentRecord)) {
        let range = self.leaf_range(leaf);
        let start = range.start as u32;
        for (k, r) in self.records[range].iter().enumerate() {
            f(start + k as u32, r);
        }
    }
}

pub fn exclusive_prefix_sum(counts: &[u32]) -> Result<Vec<u32>, VolumeError> {
    let mut acc = 0u64;
    counts
        .iter()
        .map(|&c| {
            let here = u32::try_from(acc).map_err(|_| VolumeError::TooManyFragments(acc))?;
            acc += c as u64;
            Ok(here)
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| {
            u32::try_from(acc).map_err(|_| VolumeError::TooManyFragments(acc))?;
            Ok(v)
        })
}

struct CountingSink {
    levels: u32,
    counts: Vec<AtomicU32>,
}

impl FragmentSink for CountingSink {
    fn emit(&self, fragment: &EmittedFragment) {
        let pos = FragmentRecord::from_emitted(fragment, NIL).position();
        self.counts[leaf_of(pos, self.levels) as usize].fetch_add(1, Ordering::Relaxed);
    }
}

struct ScatterSink<'a> {
    levels: u32,
    offsets: &'a [u32],
    counts: &'a [u32],
    cursors: &'a [AtomicU32],
    pool: &'a FragmentPool,
    mismatch: AtomicBool,
}

impl FragmentSink for ScatterSink<'_> {
    fn emit(&self, fragment: &EmittedFragment) {
        let record = FragmentRecord::from_emitted(fragment, NIL);
        let leaf = leaf_of(record.position(), self.levels) as usize;
        let slot = self.cursors[leaf].fetch_add(1, Ordering::Relaxed);
        if slot >= self.counts[leaf] {
            self.mismatch.store(true, Ordering::Relaxed);
            return;
        }
        self.pool.write(self.offsets[leaf] + slot, record);
    }
}

/// Two-pass build: count fragments per leaf, lay the leaves out by an
/// exclusive prefix sum, then capture again and scatter each fragment into
/// its leaf's range using the zeroed counters as write cursors.
pub fn pofa_build(
    scene: &Scene,
    strategy: CaptureStrategy,
    cfg: &RasterConfig,
    levels: u32,
    exec: Execution,
) -> Result<(Pofa, CaptureStats), VolumeError> {
    check_levels(levels)?;
    let leaves = 1usize << (3 * levels);
    let counter = CountingSink {
        levels,
        counts: (0..leaves).map(|_| AtomicU32::new(0)).collect(),
    };
    capture_pass_with(scene, strategy, cfg, &counter, exec)?;

    let counts: Vec<u32> = counter.counts.iter().map(|c| c.load(Ordering::Relaxed)).collect();
    let offsets = exclusive_prefix_sum(&counts)?;
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    let cursors = counter.counts;
    for c in &cursors {
        c.store(0, Ordering::Relaxed);
    }

    let pool = FragmentPool::with_capacity(total as usize);
    let scatter = ScatterSink {
        levels,
        offsets: &offsets,
        counts: &counts,
        cursors: &cursors,
        pool: &pool,
        mismatch: AtomicBool::new(false),
    };
    let stats = capture_pass_with(scene, strategy, cfg, &scatter, exec)?;
    let written: u64 = cursors.iter().map(|c| c.load(Ordering::Relaxed) as u64).sum();
    if scatter.mismatch.into_inner() || written != total || stats.fragments_emitted != total {
        return Err(VolumeError::CountMismatch { counted: total, written });
    }
    let records = (0..total as u32)
        .map(|i| *pool.get(i).expect("every slot written once"))
        .collect();
    let pyramid = OccupancyPyramid::from_leaves(levels, |m| counts[m as usize] > 0);
    Ok((
        Pofa {
            levels,
            resolution: cfg.width,
            offsets,
            counts,
            pyramid,
            records,
        },
        stats,
    ))
}

/// Re-packs a POFL into contiguous per-leaf arrays. Within a leaf the
/// fragments keep insertion order, so a sequential capture yields the same
/// POFA as [`pofa_build`].
pub fn rebuild_pofl_as_pofa(pofl: &Pofl) -> Pofa {
    let leaves = pofl.heads.len();
    let mut counts = vec![0u32; leaves];
    let mut records = Vec::with_capacity(pofl.records.len());
    let mut scratch = Vec::new();
    for (leaf, count) in counts.iter_mut().enumerate() {
        scratch.clear();
        scratch.extend(pofl.chain(leaf as u64).map(|(_, r)| FragmentRecord { prev_index: NIL, ..*r }));
        *count = scratch.len() as u32;
        records.extend(scratch.drain(..).rev());
    }
    Pofa::from_counts(pofl.levels, pofl.resolution, counts, records).expect("counts match records by construction")
}
