//! Byte accounting for the deferred G-buffer and the three fragment layouts.

use serde::{Deserialize, Serialize};

use super::pool::RecordLayout;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LayoutKind {
    Ds,
    Ppfl,
    Pofl,
    Pofa,
}

impl std::str::FromStr for LayoutKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ds" | "deferred" => Ok(LayoutKind::Ds),
            "ppfl" => Ok(LayoutKind::Ppfl),
            "pofl" => Ok(LayoutKind::Pofl),
            "pofa" => Ok(LayoutKind::Pofa),
            other => Err(format!("unknown layout {other:?}")),
        }
    }
}

/// Bytes per octant in the POFL directory (one head index).
pub const POFL_OCTANT_BYTES: u64 = 4;
/// Bytes per octant in the POFA directory (offset and count).
pub const POFA_OCTANT_BYTES: u64 = 8;
/// A POFA fragment drops the previous-index link; 32 bytes is already
/// four-component aligned, so both record layouts shrink to this.
pub const POFA_RECORD_BYTES: u64 = 32;
/// Position, normal, material id and object id per G-buffer pixel, four
/// bytes each.
pub const DEFAULT_GBUFFER_PAYLOAD: u64 = 32;
/// Assumed fragments per capture pixel when sizing linked-list pools.
pub const DEFAULT_DEPTH_COMPLEXITY: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryParams {
    /// Output resolution for DS, capture resolution otherwise.
    pub width: u32,
    pub height: u32,
    pub levels: u32,
    pub record: RecordLayout,
    /// Pool capacity for PPFL/POFL, exact fragment count for POFA.
    pub fragments: u64,
    pub gbuffer_payload: u64,
}

impl MemoryParams {
    /// Linked-list pool sized by the default depth-complexity estimate.
    pub fn over_allocated(width: u32, height: u32, levels: u32, record: RecordLayout) -> Self {
        Self {
            width,
            height,
            levels,
            record,
            fragments: DEFAULT_DEPTH_COMPLEXITY * width as u64 * height as u64,
            gbuffer_payload: DEFAULT_GBUFFER_PAYLOAD,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryBreakdown {
    pub layout: LayoutKind,
    /// Per-pixel heads, G-buffer texels or octant entries.
    pub directory_bytes: u64,
    pub fragment_bytes: u64,
    pub total_bytes: u64,
}

impl MemoryBreakdown {
    pub fn total_mib(&self) -> f64 {
        self.total_bytes as f64 / (1024.0 * 1024.0)
    }
}

/// Nodes in a complete octree of `levels` levels below the root.
pub fn octant_count(levels: u32) -> u64 {
    ((1u64 << (3 * (levels + 1))) - 1) / 7
}

pub fn memory_report(layout: LayoutKind, p: &MemoryParams) -> MemoryBreakdown {
    let pixels = p.width as u64 * p.height as u64;
    let (directory_bytes, fragment_bytes) = match layout {
        LayoutKind::Ds => (pixels * p.gbuffer_payload, 0),
        LayoutKind::Ppfl => (4 * pixels, p.record.bytes() * p.fragments),
        LayoutKind::Pofl => (POFL_OCTANT_BYTES * octant_count(p.levels), p.record.bytes() * p.fragments),
        LayoutKind::Pofa => (POFA_OCTANT_BYTES * octant_count(p.levels), POFA_RECORD_BYTES * p.fragments),
    };
    MemoryBreakdown {
        layout,
        directory_bytes,
        fragment_bytes,
        total_bytes: directory_bytes + fragment_bytes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(levels: u32, fragments: u64) -> MemoryParams {
        MemoryParams {
            fragments,
            ..MemoryParams::over_allocated(1000, 1000, levels, RecordLayout::Aligned48)
        }
    }

    #[test]
    fn octant_counts() {
        assert_eq!(octant_count(0), 1);
        assert_eq!(octant_count(1), 9);
        assert_eq!(octant_count(6), 299_593);
    }

    #[test]
    fn ppfl_at_one_megapixel() {
        let m = memory_report(LayoutKind::Ppfl, &MemoryParams::over_allocated(1000, 1000, 0, RecordLayout::Aligned48));
        assert_eq!(m.total_bytes, 4_000_000 + 480_000_000);
        assert!((m.total_mib() - 462.0).abs() / 462.0 < 0.01);
    }

    #[test]
    fn pofl_rows_of_the_memory_table() {
        // 459, 467 and 531 MiB for 6, 7 and 8 levels
        for (levels, mib) in [(6, 459.0), (7, 467.0), (8, 531.0)] {
            let m = memory_report(LayoutKind::Pofl, &MemoryParams::over_allocated(1000, 1000, levels, RecordLayout::Aligned48));
            assert!((m.total_mib() - mib).abs() < 1.0, "{levels}: {}", m.total_mib());
        }
    }

    #[test]
    fn pofa_rows_of_the_memory_table() {
        // 514,479 and 1,685,548 fragments with the normal-space capture
        for (levels, count, mib) in [
            (6, 514_479, 18.0),
            (7, 514_479, 34.0),
            (8, 514_479, 162.0),
            (6, 1_685_548, 54.0),
            (7, 1_685_548, 70.0),
            (8, 1_685_548, 198.0),
        ] {
            let m = memory_report(LayoutKind::Pofa, &params(levels, count));
            assert!((m.total_mib() - mib).abs() < 1.0, "{levels}/{count}: {}", m.total_mib());
        }
    }

    #[test]
    fn pofa_empty_is_directory_only() {
        let m = memory_report(LayoutKind::Pofa, &params(1, 0));
        assert_eq!(m.fragment_bytes, 0);
        assert_eq!(m.total_bytes, 9 * POFA_OCTANT_BYTES);
    }

    #[test]
    fn pofa_beats_over_allocated_pofl() {
        for levels in 1..=8 {
            let count = 1_000_000;
            let pofl = memory_report(LayoutKind::Pofl, &params(levels, count));
            let pofa = memory_report(LayoutKind::Pofa, &params(levels, count));
            let delta = (POFA_OCTANT_BYTES - POFL_OCTANT_BYTES) * octant_count(levels);
            assert!(pofa.total_bytes <= pofl.total_bytes + delta);
            let over = memory_report(LayoutKind::Pofl, &params(levels, 10 * count));
            assert!(pofa.total_bytes < over.total_bytes);
        }
    }

    #[test]
    fn gbuffer_at_720p() {
        let m = memory_report(
            LayoutKind::Ds,
            &MemoryParams {
                width: 1280,
                height: 720,
                ..params(0, 0)
            },
        );
        assert_eq!(m.total_bytes, 1280 * 720 * 32);
        assert!((m.total_mib() - 28.0).abs() < 0.5);
    }
}
