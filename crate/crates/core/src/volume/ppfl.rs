//! Per-pixel fragment lists: a head index per capture pixel chaining into
//! the shared pool.

use std::sync::atomic::{AtomicI32, Ordering};

use super::pool::{FragmentPool, FragmentRecord, PoolOverflow, PoolSummary, NIL};
use super::VolumeError;
use crate::raster::{capture_pass_with, CaptureStats, CaptureStrategy, EmittedFragment, Execution, FragmentSink, RasterConfig};
use crate::scene::Scene;

pub struct PixelDirectory {
    width: u32,
    height: u32,
    heads: Vec<AtomicI32>,
}

impl PixelDirectory {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            heads: (0..width as usize * height as usize).map(|_| AtomicI32::new(NIL)).collect(),
        }
    }

    pub fn head(&self, x: u32, y: u32) -> i32 {
        self.heads[(y * self.width + x) as usize].load(Ordering::Relaxed)
    }
}

/// Appends `frag` to the list of its capture pixel. On overflow the fragment
/// is dropped, the pool flagged and the list left untouched.
pub fn ppfl_insert(dir: &PixelDirectory, pool: &FragmentPool, frag: &EmittedFragment) -> Result<u32, PoolOverflow> {
    let (x, y) = frag.raster_xy;
    debug_assert!(x < dir.width && y < dir.height);
    let idx = pool.allocate()?;
    let prev = dir.heads[(y * dir.width + x) as usize].swap(idx as i32, Ordering::AcqRel);
    pool.write(idx, FragmentRecord::from_emitted(frag, prev));
    Ok(idx)
}

pub struct PpflBuilder {
    pub dir: PixelDirectory,
    pub pool: FragmentPool,
}

impl PpflBuilder {
    pub fn new(width: u32, height: u32, capacity: usize) -> Self {
        Self {
            dir: PixelDirectory::new(width, height),
            pool: FragmentPool::with_capacity(capacity),
        }
    }

    pub fn freeze(self) -> Ppfl {
        let (records, pool) = self.pool.freeze();
        Ppfl {
            width: self.dir.width,
            height: self.dir.height,
            heads: self.dir.heads.into_iter().map(AtomicI32::into_inner).collect(),
            records,
            pool,
        }
    }
}

impl FragmentSink for PpflBuilder {
    fn emit(&self, fragment: &EmittedFragment) {
        let _ = ppfl_insert(&self.dir, &self.pool, fragment);
    }
}

/// Frozen per-pixel layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Ppfl {
    pub width: u32,
    pub height: u32,
    pub heads: Vec<i32>,
    pub records: Vec<FragmentRecord>,
    pub pool: PoolSummary,
}

impl Ppfl {
    /// Pool indices of the fragments at pixel `(x, y)`, newest first.
    pub fn chain(&self, x: u32, y: u32) -> Chain<'_> {
        Chain {
            records: &self.records,
            next: self.heads[(y * self.width + x) as usize],
        }
    }
}

/// Walks `prev_index` links from a head.
pub struct Chain<'a> {
    pub(crate) records: &'a [FragmentRecord],
    pub(crate) next: i32,
}

impl<'a> Iterator for Chain<'a> {
    type Item = (u32, &'a FragmentRecord);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next < 0 {
            return None;
        }
        let idx = self.next as u32;
        let rec = &self.records[idx as usize];
        debug_assert!(rec.prev_index < self.next, "chains point strictly backwards");
        self.next = rec.prev_index;
        Some((idx, rec))
    }
}

/// Captures `scene` into per-pixel lists. Only single-view strategies have
/// a pixel grid to key on.
pub fn ppfl_build(
    scene: &Scene,
    strategy: CaptureStrategy,
    cfg: &RasterConfig,
    capacity: usize,
    exec: Execution,
) -> Result<(Ppfl, CaptureStats), VolumeError> {
    if !strategy.is_view_aligned() {
        return Err(VolumeError::ViewDependentLayout(strategy));
    }
    let builder = PpflBuilder::new(cfg.width, cfg.height, capacity);
    let stats = capture_pass_with(scene, strategy, cfg, &builder, exec)?;
    Ok((builder.freeze(), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use glam::DVec3;

    fn frag(x: u32, y: u32, id: u32) -> EmittedFragment {
        EmittedFragment {
            raster_xy: (x, y),
            world_position: DVec3::splat(0.5),
            world_normal: DVec3::Z,
            depth: 0.5,
            material_id: 0,
            object_id: id,
        }
    }

    #[test]
    fn same_pixel_links_backwards() {
        let b = PpflBuilder::new(2, 2, 8);
        assert_eq!(ppfl_insert(&b.dir, &b.pool, &frag(1, 0, 10)), Ok(0));
        assert_eq!(ppfl_insert(&b.dir, &b.pool, &frag(1, 0, 11)), Ok(1));
        let p = b.freeze();
        assert_eq!(p.heads[1], 1);
        assert_eq!(p.records[1].prev_index, 0);
        assert_eq!(p.records[0].prev_index, NIL);
        assert_eq!(p.heads[0], NIL);
        let ids: Vec<_> = p.chain(1, 0).map(|(_, r)| r.object_id).collect();
        assert_eq!(ids, vec![11, 10]);
        assert_eq!(p.chain(0, 1).count(), 0);
    }

    #[test]
    fn capacity_one_overflows_on_second_insert() {
        let b = PpflBuilder::new(1, 1, 1);
        assert!(ppfl_insert(&b.dir, &b.pool, &frag(0, 0, 1)).is_ok());
        assert!(ppfl_insert(&b.dir, &b.pool, &frag(0, 0, 2)).is_err());
        let p = b.freeze();
        assert_eq!(p.records.len(), 1);
        assert!(p.pool.overflowed);
        assert_eq!(p.pool.requested, 2);
        assert_eq!(p.heads[0], 0);
        assert_eq!(p.chain(0, 0).count(), 1);
    }

    #[test]
    fn rejects_view_independent_strategies() {
        let scene = crate::scene::three_quads();
        let cfg = RasterConfig::capture(8).unwrap();
        assert!(matches!(
            ppfl_build(&scene, CaptureStrategy::NormalSpace, &cfg, 100, Execution::Sequential),
            Err(VolumeError::ViewDependentLayout(_))
        ));
    }
}
