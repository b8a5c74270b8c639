use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::OnceLock;

use glam::{DVec3, Vec3};
use serde::{Deserialize, Serialize};

use crate::raster::EmittedFragment;

/// Marks the end of a fragment chain.
pub const NIL: i32 = -1;

/// One stored fragment: 36 bytes packed.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FragmentRecord {
    pub position: [f32; 3],
    pub normal: [f32; 3],
    pub material_id: u32,
    pub object_id: u32,
    /// Pool index of the previously inserted fragment with the same key,
    /// or [`NIL`].
    pub prev_index: i32,
}

const _: () = assert!(std::mem::size_of::<FragmentRecord>() == 36);

/// Largest `f32` below one; stored positions never reach the upper face.
const BELOW_ONE: f32 = 1.0 - f32::EPSILON / 2.0;

impl FragmentRecord {
    pub const PACKED_SIZE: usize = 36;

    pub fn from_emitted(frag: &EmittedFragment, prev_index: i32) -> Self {
        let p = frag.world_position.as_vec3().clamp(Vec3::ZERO, Vec3::splat(BELOW_ONE));
        Self {
            position: p.to_array(),
            normal: frag.world_normal.as_vec3().to_array(),
            material_id: frag.material_id,
            object_id: frag.object_id,
            prev_index,
        }
    }

    pub fn position(&self) -> DVec3 {
        Vec3::from_array(self.position).as_dvec3()
    }

    pub fn normal(&self) -> DVec3 {
        Vec3::from_array(self.normal).as_dvec3()
    }

    pub fn write_le(&self, out: &mut Vec<u8>) {
        for v in self.position.iter().chain(&self.normal) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.material_id.to_le_bytes());
        out.extend_from_slice(&self.object_id.to_le_bytes());
        out.extend_from_slice(&self.prev_index.to_le_bytes());
    }

    pub fn read_le(bytes: &[u8; Self::PACKED_SIZE]) -> Self {
        let word = |i: usize| <[u8; 4]>::try_from(&bytes[4 * i..4 * i + 4]).unwrap();
        let f = |i| f32::from_le_bytes(word(i));
        Self {
            position: [f(0), f(1), f(2)],
            normal: [f(3), f(4), f(5)],
            material_id: u32::from_le_bytes(word(6)),
            object_id: u32::from_le_bytes(word(7)),
            prev_index: i32::from_le_bytes(word(8)),
        }
    }
}

/// Bytes per record in a serialized pool or in memory accounting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordLayout {
    #[default]
    Packed36,
    /// Padded to four-component alignment.
    Aligned48,
}

impl RecordLayout {
    pub fn bytes(self) -> u64 {
        match self {
            RecordLayout::Packed36 => 36,
            RecordLayout::Aligned48 => 48,
        }
    }

    pub fn from_bytes(bytes: u64) -> Option<Self> {
        match bytes {
            36 => Some(RecordLayout::Packed36),
            48 => Some(RecordLayout::Aligned48),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("fragment pool full: requested slot {requested} of {capacity}")]
pub struct PoolOverflow {
    pub requested: u64,
    pub capacity: u64,
}

/// Capacity, allocation requests and overflow state of a pool after capture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub capacity: u64,
    /// Slots asked for, including refused ones.
    pub requested: u64,
    pub overflowed: bool,
}

impl PoolSummary {
    pub fn exact(count: u64) -> Self {
        Self {
            capacity: count,
            requested: count,
            overflowed: false,
        }
    }

    pub fn stored(&self) -> u64 {
        self.requested.min(self.capacity)
    }
}

/// Pre-allocated fragment storage shared by concurrent inserters. Slots are
/// handed out by an atomic counter and each is written exactly once.
pub struct FragmentPool {
    slots: Vec<OnceLock<FragmentRecord>>,
    next_free: AtomicU64,
    overflowed: AtomicBool,
}

impl FragmentPool {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            slots: std::iter::repeat_with(OnceLock::new).take(capacity).collect(),
            next_free: AtomicU64::new(0),
            overflowed: AtomicBool::new(false),
        }
    }

    pub fn capacity(&self) -> u64 {
        self.slots.len() as u64
    }

    /// Claims the next free slot.
    pub fn allocate(&self) -> Result<u32, PoolOverflow> {
        let idx = self.next_free.fetch_add(1, Ordering::Relaxed);
        if idx < self.capacity() {
            Ok(idx as u32)
        } else {
            self.overflowed.store(true, Ordering::Relaxed);
            Err(PoolOverflow {
                requested: idx,
                capacity: self.capacity(),
            })
        }
    }

    /// Writes a claimed slot. Panics if the slot was already written.
    pub fn write(&self, index: u32, record: FragmentRecord) {
        if self.slots[index as usize].set(record).is_err() {
            panic!("fragment slot {index} written twice");
        }
    }

    pub fn get(&self, index: u32) -> Option<&FragmentRecord> {
        self.slots.get(index as usize)?.get()
    }

    pub fn summary(&self) -> PoolSummary {
        PoolSummary {
            capacity: self.capacity(),
            requested: self.next_free.load(Ordering::Relaxed),
            overflowed: self.overflowed.load(Ordering::Relaxed),
        }
    }

    /// Returns the stored records in slot order. Every claimed slot must
    /// have been written.
    pub fn freeze(self) -> (Vec<FragmentRecord>, PoolSummary) {
        let summary = self.summary();
        let stored = summary.stored() as usize;
        let records = self
            .slots
            .into_iter()
            .take(stored)
            .enumerate()
            .map(|(i, s)| s.into_inner().unwrap_or_else(|| panic!("slot {i} claimed but never written")))
            .collect();
        (records, summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(i: u32) -> FragmentRecord {
        FragmentRecord {
            position: [0.25, 0.5, 0.75],
            normal: [0.0, 0.0, 1.0],
            material_id: i,
            object_id: 2 * i,
            prev_index: i as i32 - 1,
        }
    }

    #[test]
    fn packed_bytes_roundtrip() {
        let r = record(7);
        let mut buf = Vec::new();
        r.write_le(&mut buf);
        assert_eq!(buf.len(), 36);
        assert_eq!(&buf[..4], &0.25f32.to_le_bytes());
        assert_eq!(&buf[32..], &6i32.to_le_bytes());
        assert_eq!(FragmentRecord::read_le(buf.as_slice().try_into().unwrap()), r);
    }

    #[test]
    fn overflow_drops_and_flags() {
        let pool = FragmentPool::with_capacity(1);
        let a = pool.allocate().unwrap();
        pool.write(a, record(0));
        let err = pool.allocate().unwrap_err();
        assert_eq!(err, PoolOverflow { requested: 1, capacity: 1 });
        let (records, summary) = pool.freeze();
        assert_eq!(records.len(), 1);
        assert_eq!(summary, PoolSummary { capacity: 1, requested: 2, overflowed: true });
    }

    #[test]
    #[should_panic(expected = "written twice")]
    fn double_write_panics() {
        let pool = FragmentPool::with_capacity(2);
        pool.write(0, record(0));
        pool.write(0, record(1));
    }

    #[test]
    fn stored_positions_stay_below_one() {
        let f = EmittedFragment {
            raster_xy: (0, 0),
            world_position: DVec3::new(1.0, -1e-9, 0.5),
            world_normal: DVec3::Z,
            depth: 0.5,
            material_id: 0,
            object_id: 0,
        };
        let r = FragmentRecord::from_emitted(&f, NIL);
        assert!(r.position[0] < 1.0 && r.position[1] == 0.0);
    }
}
