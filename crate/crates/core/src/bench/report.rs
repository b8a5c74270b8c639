use serde::Serialize;

use super::Technique;
use crate::raster::{CaptureStats, Execution};
use crate::raycast::{FrameRayStats, RaycastMode};
use crate::volume::{memory_report, LayoutKind, MemoryParams, PoolSummary};

/// JSON schema every report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../../assets/report.schema.json");

/// One run of any subcommand. Fields that do not apply to a command are
/// still present, as `null` or an empty list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub command: String,
    pub scene: String,
    pub layout: LayoutKind,
    pub strategy: String,
    pub levels: u32,
    pub capture_resolution: u32,
    pub output_resolution: [u32; 2],
    pub technique: Option<Technique>,
    pub mode: Option<RaycastMode>,
    pub execution: Execution,
    pub threads: usize,
    pub seed: u64,
    pub capture: Option<CaptureStats>,
    pub pool: Option<PoolSummary>,
    pub overflowed: bool,
    /// Pool slots the capture asked for, when it did not fit.
    pub required_capacity: Option<u64>,
    pub build_ms: Option<f64>,
    pub memory: Vec<MemoryRow>,
    pub frames: Vec<FrameReport>,
    pub frame0: Option<PhaseTimes>,
    /// Mean over frames after the first.
    pub steady_state: Option<PhaseTimes>,
    pub strategies: Vec<StrategyRow>,
    pub relations: Option<StrategyRelations>,
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemoryRow {
    pub layout: LayoutKind,
    pub levels: Option<u32>,
    pub width: u32,
    pub height: u32,
    pub fragments: u64,
    pub record_bytes: u64,
    pub gbuffer_payload_bytes: Option<u64>,
    pub directory_bytes: u64,
    pub fragment_bytes: u64,
    pub total_bytes: u64,
    pub total_mib: f64,
}

impl MemoryRow {
    pub fn new(layout: LayoutKind, p: &MemoryParams) -> Self {
        let b = memory_report(layout, p);
        let record_bytes = match layout {
            LayoutKind::Ds => 0,
            LayoutKind::Pofa => crate::volume::POFA_RECORD_BYTES,
            _ => p.record.bytes(),
        };
        Self {
            layout,
            levels: matches!(layout, LayoutKind::Pofl | LayoutKind::Pofa).then_some(p.levels),
            width: p.width,
            height: p.height,
            fragments: if layout == LayoutKind::Ds { 0 } else { p.fragments },
            record_bytes,
            gbuffer_payload_bytes: (layout == LayoutKind::Ds).then_some(p.gbuffer_payload),
            directory_bytes: b.directory_bytes,
            fragment_bytes: b.fragment_bytes,
            total_bytes: b.total_bytes,
            total_mib: b.total_mib(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameReport {
    pub index: u32,
    /// Rasterization of the scene: the G-buffer pass for deferred shading,
    /// the volume build (frame 0 only) for the volume techniques.
    pub geometry_ms: f64,
    pub evaluation_ms: f64,
    pub total_ms: f64,
    pub covered_pixels: u64,
    pub raycast: Option<FrameRayStats>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseTimes {
    pub geometry_ms: f64,
    pub evaluation_ms: f64,
    pub total_ms: f64,
}

impl PhaseTimes {
    pub fn of(f: &FrameReport) -> Self {
        Self {
            geometry_ms: f.geometry_ms,
            evaluation_ms: f.evaluation_ms,
            total_ms: f.total_ms,
        }
    }

    pub fn mean(frames: &[FrameReport]) -> Option<Self> {
        if frames.is_empty() {
            return None;
        }
        let n = frames.len() as f64;
        let sum = |g: fn(&FrameReport) -> f64| frames.iter().map(g).sum::<f64>() / n;
        Some(Self {
            geometry_ms: sum(|f| f.geometry_ms),
            evaluation_ms: sum(|f| f.evaluation_ms),
            total_ms: sum(|f| f.total_ms),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyRow {
    pub strategy: String,
    pub stats: CaptureStats,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrategyRelations {
    pub one_view: u64,
    pub normal_space: u64,
    pub three_way: u64,
    pub three_separate: u64,
    /// Sum over triangles of twice the perimeter in capture pixels.
    pub slack: f64,
    pub separate_equals_three_way: bool,
    pub one_view_le_normal_space: bool,
    pub normal_space_le_three_way: bool,
}

impl StrategyRelations {
    pub fn check(one_view: u64, normal_space: u64, three_way: u64, three_separate: u64, slack: f64) -> Self {
        Self {
            one_view,
            normal_space,
            three_way,
            three_separate,
            slack,
            separate_equals_three_way: three_separate == three_way,
            one_view_le_normal_space: one_view as f64 <= normal_space as f64 + slack,
            normal_space_le_three_way: normal_space as f64 <= three_way as f64 + slack,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.separate_equals_three_way && self.one_view_le_normal_space && self.normal_space_le_three_way
    }
}
