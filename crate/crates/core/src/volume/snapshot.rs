//! Binary snapshot of a frozen volume.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! header   "FHV1" | layout u32 | levels u32 | width u32 | height u32
//!          | record_size u32 | fragment_count u64
//! PPFL     heads i32 x width*height
//! POFL     heads i32 x 8^levels
//! POFA     offsets u32 x 8^levels, counts u32 x 8^levels
//! records  fragment_count x record_size bytes (36 packed, 48 zero-padded)
//! ```
//!
//! Layout tags are 1 (PPFL), 2 (POFL) and 3 (POFA). Occupancy pyramids are
//! rebuilt on load.

use std::path::Path;

use thiserror::Error;

use super::octree::{Pofa, Pofl, MAX_OCTREE_LEVELS};
use super::pool::{FragmentRecord, PoolSummary, RecordLayout};
use super::ppfl::Ppfl;
use super::pyramid::OccupancyPyramid;
use super::{LayoutKind, Volume};

pub const MAGIC: &[u8; 4] = b"FHV1";
pub const HEADER_BYTES: usize = 32;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not an FHV snapshot")]
    BadMagic,
    #[error("unknown layout tag {0}")]
    BadLayout(u32),
    #[error("unsupported record size {0}")]
    BadRecordSize(u32),
    #[error("snapshot truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("inconsistent snapshot: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn tag(layout: LayoutKind) -> u32 {
    match layout {
        LayoutKind::Ppfl => 1,
        LayoutKind::Pofl => 2,
        LayoutKind::Pofa => 3,
        LayoutKind::Ds => unreachable!("deferred shading has no volume"),
    }
}

pub fn encode(volume: &Volume, record: RecordLayout) -> Vec<u8> {
    let (levels, width, height) = match volume {
        Volume::Ppfl(p) => (0, p.width, p.height),
        Volume::Pofl(p) => (p.levels, p.resolution, p.resolution),
        Volume::Pofa(p) => (p.levels, p.resolution, p.resolution),
    };
    let records = volume.records();
    let mut out = Vec::with_capacity(HEADER_BYTES + records.len() * record.bytes() as usize);
    out.extend_from_slice(MAGIC);
    for v in [tag(volume.layout()), levels, width, height, record.bytes() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    let put_i32 = |out: &mut Vec<u8>, vs: &[i32]| vs.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    let put_u32 = |out: &mut Vec<u8>, vs: &[u32]| vs.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    match volume {
        Volume::Ppfl(p) => put_i32(&mut out, &p.heads),
        Volume::Pofl(p) => put_i32(&mut out, &p.heads),
        Volume::Pofa(p) => {
            put_u32(&mut out, &p.offsets);
            put_u32(&mut out, &p.counts);
        }
    }
    let pad = record.bytes() as usize - FragmentRecord::PACKED_SIZE;
    for r in records {
        r.write_le(&mut out);
        out.extend(std::iter::repeat_n(0u8, pad));
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(SnapshotError::Truncated {
            needed: self.at.saturating_add(n),
            have: self.bytes.len(),
        })?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>, SnapshotError> {
        let raw = self.take(n.checked_mul(4).ok_or(SnapshotError::Inconsistent("directory too large".into()))?)?;
        Ok(raw.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn i32s(&mut self, n: usize) -> Result<Vec<i32>, SnapshotError> {
        Ok(self.u32s(n)?.into_iter().map(|v| v as i32).collect())
    }
}

fn check_heads(heads: &[i32], records: &[FragmentRecord]) -> Result<(), SnapshotError> {
    let n = records.len() as i64;
    let bad = heads.iter().any(|&h| h < -1 || h as i64 >= n)
        || records.iter().enumerate().any(|(i, r)| r.prev_index < -1 || r.prev_index as i64 >= i as i64);
    if bad {
        return Err(SnapshotError::Inconsistent("fragment chain index out of range".into()));
    }
    Ok(())
}

pub fn decode(bytes: &[u8]) -> Result<Volume, SnapshotError> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4).map_err(|_| SnapshotError::BadMagic)? != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let layout = r.u32()?;
    let levels = r.u32()?;
    let width = r.u32()?;
    let height = r.u32()?;
    let record_size = r.u32()?;
    let count = r.u64()?;
    let record = RecordLayout::from_bytes(record_size as u64).ok_or(SnapshotError::BadRecordSize(record_size))?;
    let count = usize::try_from(count).map_err(|_| SnapshotError::Inconsistent("fragment count".into()))?;
    if layout != 1 && !(1..=MAX_OCTREE_LEVELS).contains(&levels) {
        return Err(SnapshotError::Inconsistent(format!("octree levels {levels}")));
    }
    let leaves = 1usize << (3 * levels);

    enum Dir {
        Pixel(Vec<i32>),
        Leaf(Vec<i32>),
        Array(Vec<u32>, Vec<u32>),
    }
    let dir = match layout {
        1 => Dir::Pixel(r.i32s(width as usize * height as usize)?),
        2 => Dir::Leaf(r.i32s(leaves)?),
        3 => Dir::Array(r.u32s(leaves)?, r.u32s(leaves)?),
        other => return Err(SnapshotError::BadLayout(other)),
    };
    let stride = record.bytes() as usize;
    let raw = r.take(count.checked_mul(stride).ok_or(SnapshotError::Inconsistent("pool too large".into()))?)?;
    let records: Vec<FragmentRecord> = raw
        .chunks_exact(stride)
        .map(|c| FragmentRecord::read_le(c[..FragmentRecord::PACKED_SIZE].try_into().unwrap()))
        .collect();
    if r.at != bytes.len() {
        return Err(SnapshotError::Inconsistent(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    let pool = PoolSummary::exact(count as u64);
    Ok(match dir {
        Dir::Pixel(heads) => {
            check_heads(&heads, &records)?;
            Volume::Ppfl(Ppfl { width, height, heads, records, pool })
        }
        Dir::Leaf(heads) => {
            check_heads(&heads, &records)?;
            let pyramid = OccupancyPyramid::from_leaves(levels, |m| heads[m as usize] >= 0);
            Volume::Pofl(Pofl { levels, resolution: width, heads, pyramid, records, pool })
        }
        Dir::Array(offsets, counts) => {
            let pofa = Pofa::from_counts(levels, width, counts, records)
                .map_err(|e| SnapshotError::Inconsistent(e.to_string()))?;
            if pofa.offsets != offsets {
                return Err(SnapshotError::Inconsistent("offsets are not the prefix sum of counts".into()));
            }
            Volume::Pofa(pofa)
        }
    })
}

pub fn write_snapshot(path: &Path, volume: &Volume, record: RecordLayout) -> Result<(), SnapshotError> {
    std::fs::write(path, encode(volume, record))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Volume, SnapshotError> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{CaptureStrategy, Execution, RasterConfig};
    use crate::scene::{three_quads, Axis};
    use crate::volume::{pofa_build, pofl_build, ppfl_build};

    fn volumes() -> Vec<Volume> {
        let scene = three_quads();
        let cfg = RasterConfig::capture(16).unwrap();
        let view = CaptureStrategy::OneView(Axis::Z);
        vec![
            Volume::Ppfl(ppfl_build(&scene, view, &cfg, 2000, Execution::Sequential).unwrap().0),
            Volume::Pofl(pofl_build(&scene, CaptureStrategy::NormalSpace, &cfg, 3, 2000, Execution::Sequential).unwrap().0),
            Volume::Pofa(pofa_build(&scene, CaptureStrategy::NormalSpace, &cfg, 3, Execution::Sequential).unwrap().0),
        ]
    }

    #[test]
    fn roundtrip_every_layout_and_record_size() {
        for v in volumes() {
            for record in [RecordLayout::Packed36, RecordLayout::Aligned48] {
                let bytes = encode(&v, record);
                assert_eq!(&bytes[..4], MAGIC);
                assert_eq!(bytes.len(), HEADER_BYTES + dir_bytes(&v) + v.records().len() * record.bytes() as usize);
                let back = decode(&bytes).unwrap();
                assert_eq!(back.records(), v.records());
                assert_eq!(encode(&back, record), bytes);
            }
        }
    }

    fn dir_bytes(v: &Volume) -> usize {
        match v {
            Volume::Ppfl(p) => 4 * p.heads.len(),
            Volume::Pofl(p) => 4 * p.heads.len(),
            Volume::Pofa(p) => 8 * p.counts.len(),
        }
    }

    #[test]
    fn header_fields() {
        let v = &volumes()[2];
        let bytes = encode(v, RecordLayout::Packed36);
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        assert_eq!([word(0), word(1), word(2), word(3), word(4)], [3, 3, 16, 16, 36]);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), v.records().len() as u64);
    }

    #[test]
    fn rejects_corruption() {
        let v = &volumes()[1];
        let bytes = encode(v, RecordLayout::Packed36);
        assert!(matches!(decode(b"FHV0"), Err(SnapshotError::BadMagic)));
        assert!(matches!(decode(&bytes[..bytes.len() - 1]), Err(SnapshotError::Truncated { .. })));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode(&extra), Err(SnapshotError::Inconsistent(_))));
        let mut bad_tag = bytes.clone();
        bad_tag[4] = 9;
        assert!(matches!(decode(&bad_tag), Err(SnapshotError::BadLayout(9))));
        let mut bad_size = bytes.clone();
        bad_size[20] = 40;
        assert!(matches!(decode(&bad_size), Err(SnapshotError::BadRecordSize(40))));
        let mut bad_head = bytes;
        bad_head[HEADER_BYTES..HEADER_BYTES + 4].copy_from_slice(&1_000_000i32.to_le_bytes());
        assert!(matches!(decode(&bad_head), Err(SnapshotError::Inconsistent(_))));
    }
}
