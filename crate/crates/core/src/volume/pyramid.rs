use std::sync::atomic::{AtomicU8, Ordering};

/// Child-occupancy masks for every inner level of a linear octree.
///
/// `masks[k]` holds the `8^k` nodes at depth `k` (the root is depth 0). Bit
/// `c` of node `m` is set when child `8m + c` has an occupied leaf below it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupancyPyramid {
    levels: u32,
    masks: Vec<Vec<u8>>,
}

impl OccupancyPyramid {
    pub fn empty(levels: u32) -> Self {
        Self {
            levels,
            masks: (0..levels).map(|k| vec![0; 1 << (3 * k)]).collect(),
        }
    }

    /// Recomputes every mask from leaf occupancy, bottom up.
    pub fn from_leaves(levels: u32, occupied: impl Fn(u64) -> bool) -> Self {
        let mut p = Self::empty(levels);
        if levels == 0 {
            return p;
        }
        let bottom = levels as usize - 1;
        for (m, mask) in p.masks[bottom].iter_mut().enumerate() {
            for c in 0..8 {
                if occupied(8 * m as u64 + c) {
                    *mask |= 1 << c;
                }
            }
        }
        for k in (0..bottom).rev() {
            let (upper, lower) = p.masks.split_at_mut(k + 1);
            for (m, mask) in upper[k].iter_mut().enumerate() {
                for c in 0..8 {
                    if lower[0][8 * m + c] != 0 {
                        *mask |= 1 << c;
                    }
                }
            }
        }
        p
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Mask of node `index` at depth `depth < levels`.
    pub fn mask(&self, depth: u32, index: u64) -> u8 {
        self.masks[depth as usize][index as usize]
    }

    pub fn masks(&self) -> &[Vec<u8>] {
        &self.masks
    }

    pub fn is_leaf_occupied(&self, leaf: u64) -> bool {
        self.levels > 0 && self.mask(self.levels - 1, leaf >> 3) & (1 << (leaf & 7)) != 0
    }

    pub fn occupied_leaf_count(&self) -> u64 {
        self.masks
            .last()
            .map_or(0, |m| m.iter().map(|b| b.count_ones() as u64).sum())
    }

    pub fn is_empty(&self) -> bool {
        self.masks.first().is_none_or(|root| root[0] == 0)
    }
}

/// Concurrent builder; marking a leaf sets the bit on every level of its
/// root path.
pub struct PyramidBuilder {
    levels: u32,
    masks: Vec<Vec<AtomicU8>>,
}

impl PyramidBuilder {
    pub fn new(levels: u32) -> Self {
        Self {
            levels,
            masks: (0..levels)
                .map(|k| (0..1usize << (3 * k)).map(|_| AtomicU8::new(0)).collect())
                .collect(),
        }
    }

    pub fn mark_leaf(&self, leaf: u64) {
        for k in (0..self.levels).rev() {
            let shift = 3 * (self.levels - k);
            let node = leaf >> shift;
            let child = (leaf >> (shift - 3)) & 7;
            self.masks[k as usize][node as usize].fetch_or(1 << child, Ordering::Relaxed);
        }
    }

    pub fn freeze(self) -> OccupancyPyramid {
        OccupancyPyramid {
            levels: self.levels,
            masks: self
                .masks
                .into_iter()
                .map(|level| level.into_iter().map(AtomicU8::into_inner).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::morton::encode_unchecked;
    use proptest::prelude::*;

    #[test]
    fn single_leaf_path() {
        let b = PyramidBuilder::new(2);
        b.mark_leaf(0);
        let p = b.freeze();
        assert_eq!(p.mask(0, 0), 1);
        assert_eq!(p.mask(1, 0), 1);
        assert_eq!(p.occupied_leaf_count(), 1);
        assert!(p.is_leaf_occupied(0) && !p.is_leaf_occupied(1));
    }

    #[test]
    fn deep_leaf_path() {
        // leaf (3,2,1) at depth 2: parent (1,1,0) -> child bit (1,0,1) = 5
        let leaf = encode_unchecked(3, 2, 1);
        let b = PyramidBuilder::new(2);
        b.mark_leaf(leaf);
        let p = b.freeze();
        assert_eq!(p.mask(0, 0), 1 << encode_unchecked(1, 1, 0));
        assert_eq!(p.mask(1, encode_unchecked(1, 1, 0)), 1 << 5);
    }

    #[test]
    fn empty_pyramid() {
        let p = OccupancyPyramid::empty(3);
        assert!(p.is_empty());
        assert_eq!(p.occupied_leaf_count(), 0);
        assert_eq!(p.masks()[2].len(), 64);
    }

    proptest! {
        #[test]
        fn builder_matches_recomputation(leaves in prop::collection::vec(0u64..512, 0..40)) {
            let b = PyramidBuilder::new(3);
            for &l in &leaves {
                b.mark_leaf(l);
            }
            let built = b.freeze();
            let oracle = OccupancyPyramid::from_leaves(3, |m| leaves.contains(&m));
            prop_assert_eq!(&built, &oracle);
            // soundness and completeness at every level
            for k in 0..3u32 {
                for node in 0..(1u64 << (3 * k)) {
                    for c in 0..8 {
                        let child = 8 * node + c;
                        let span = 3 * (3 - k - 1);
                        let any = leaves.iter().any(|&l| l >> span == child);
                        prop_assert_eq!(built.mask(k, node) & (1 << c) != 0, any);
                    }
                }
            }
        }
    }
}
