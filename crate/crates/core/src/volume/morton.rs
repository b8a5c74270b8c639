use glam::DVec3;

use super::VolumeError;

/// Deepest octree supported by 64-bit codes.
pub const MAX_MORTON_LEVELS: u32 = 20;

/// Leaf index in a linear octree of `levels` levels. Per level the x bit is
/// the least significant of the three, then y, then z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MortonCode {
    pub code: u64,
    pub levels: u32,
}

fn spread(v: u64) -> u64 {
    let mut x = v & 0x1f_ffff;
    x = (x | x << 32) & 0x001f_0000_0000_ffff;
    x = (x | x << 16) & 0x001f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

fn compact(v: u64) -> u32 {
    let mut x = v & 0x1249_2492_4924_9249;
    x = (x ^ (x >> 2)) & 0x10c3_0c30_c30c_30c3;
    x = (x ^ (x >> 4)) & 0x100f_00f0_0f00_f00f;
    x = (x ^ (x >> 8)) & 0x001f_0000_ff00_00ff;
    x = (x ^ (x >> 16)) & 0x001f_0000_0000_ffff;
    x = (x ^ (x >> 32)) & 0x1f_ffff;
    x as u32
}

pub fn morton_encode(x: u32, y: u32, z: u32, levels: u32) -> Result<MortonCode, VolumeError> {
    if levels > MAX_MORTON_LEVELS {
        return Err(VolumeError::Levels(levels));
    }
    let side = 1u64 << levels;
    for c in [x, y, z] {
        if c as u64 >= side {
            return Err(VolumeError::CellOutOfRange { cell: c, levels });
        }
    }
    Ok(MortonCode {
        code: encode_unchecked(x, y, z),
        levels,
    })
}

#[inline]
pub(crate) fn encode_unchecked(x: u32, y: u32, z: u32) -> u64 {
    spread(x as u64) | spread(y as u64) << 1 | spread(z as u64) << 2
}

pub fn morton_decode(code: MortonCode) -> [u32; 3] {
    decode_unchecked(code.code)
}

#[inline]
pub(crate) fn decode_unchecked(code: u64) -> [u32; 3] {
    [compact(code), compact(code >> 1), compact(code >> 2)]
}

/// Grid cell containing `position` at `levels` levels. Coordinates on or
/// beyond the cube faces clamp into the boundary cells.
pub fn cell_of(position: DVec3, levels: u32) -> Result<[u32; 3], VolumeError> {
    if !position.is_finite() {
        return Err(VolumeError::NonFinite);
    }
    if levels > MAX_MORTON_LEVELS {
        return Err(VolumeError::Levels(levels));
    }
    Ok(cell_unchecked(position, levels))
}

#[inline]
pub(crate) fn cell_unchecked(position: DVec3, levels: u32) -> [u32; 3] {
    let side = (1u64 << levels) as f64;
    let max = side - 1.0;
    (position * side)
        .floor()
        .clamp(DVec3::ZERO, DVec3::splat(max))
        .to_array()
        .map(|c| c as u32)
}

/// Morton index of the leaf containing `position`.
#[inline]
pub(crate) fn leaf_of(position: DVec3, levels: u32) -> u64 {
    let [x, y, z] = cell_unchecked(position, levels);
    encode_unchecked(x, y, z)
}

/// Axis-aligned bounds of a node at `depth` (0 = root) in the unit cube.
pub fn node_bounds(index: u64, depth: u32) -> (DVec3, DVec3) {
    let [x, y, z] = decode_unchecked(index);
    let edge = 1.0 / (1u64 << depth) as f64;
    let lo = DVec3::new(x as f64, y as f64, z as f64) * edge;
    (lo, lo + DVec3::splat(edge))
}
