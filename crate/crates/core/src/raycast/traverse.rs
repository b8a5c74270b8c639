use std::ops::ControlFlow;

use glam::DVec3;

use super::Ray;
use crate::volume::OccupancyPyramid;

/// A leaf reached by [`traverse_octree`], with the clipped ray interval
/// inside its cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafVisit {
    pub leaf: u64,
    pub t_entry: f64,
    pub t_exit: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Traversal {
    pub visited: u64,
    pub terminated: bool,
}

/// Parametric interval of `ray` inside the closed box `[lo, hi]`, clipped
/// to the ray's own range. Touching a face or edge counts as a hit.
pub fn box_interval(ray: &Ray, lo: DVec3, hi: DVec3) -> Option<(f64, f64)> {
    let mut t0 = ray.t_min;
    let mut t1 = ray.t_max;
    for k in 0..3 {
        let (o, d) = (ray.origin[k], ray.direction[k]);
        if d == 0.0 {
            if o < lo[k] || o > hi[k] {
                return None;
            }
            continue;
        }
        let a = (lo[k] - o) / d;
        let b = (hi[k] - o) / d;
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Visits the occupied leaves pierced by `ray` front to back.
///
/// Children are entered in order of their entry parameter (ties by child
/// index) and subtrees with an empty occupancy mask are never opened.
/// Returning `Break` from `visit` ends the traversal.
pub fn traverse_octree(
    pyramid: &OccupancyPyramid,
    ray: &Ray,
    visit: &mut dyn FnMut(LeafVisit) -> ControlFlow<()>,
) -> Traversal {
    let mut out = Traversal::default();
    if pyramid.levels() == 0 || pyramid.is_empty() || box_interval(ray, DVec3::ZERO, DVec3::ONE).is_none() {
        return out;
    }
    let mut walker = Walker {
        pyramid,
        ray,
        visit,
        visited: 0,
    };
    out.terminated = walker.descend(0, 0, DVec3::ZERO, 1.0).is_break();
    out.visited = walker.visited;
    out
}

struct Walker<'a> {
    pyramid: &'a OccupancyPyramid,
    ray: &'a Ray,
    visit: &'a mut dyn FnMut(LeafVisit) -> ControlFlow<()>,
    visited: u64,
}

impl Walker<'_> {
    fn descend(&mut self, depth: u32, node: u64, lo: DVec3, size: f64) -> ControlFlow<()> {
        let half = size * 0.5;
        let mask = self.pyramid.mask(depth, node);
        let mut order = [(0.0, 0.0, 0u8); 8];
        let mut n = 0;
        for c in 0..8u8 {
            if mask & (1 << c) == 0 {
                continue;
            }
            let offset = DVec3::new((c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64) * half;
            let clo = lo + offset;
            if let Some((t0, t1)) = box_interval(self.ray, clo, clo + DVec3::splat(half)) {
                let mut i = n;
                while i > 0 && order[i - 1].0 > t0 {
                    order[i] = order[i - 1];
                    i -= 1;
                }
                order[i] = (t0, t1, c);
                n += 1;
            }
        }
        let leaf_level = depth + 1 == self.pyramid.levels();
        for &(t_entry, t_exit, c) in &order[..n] {
            let child = 8 * node + c as u64;
            if leaf_level {
                self.visited += 1;
                (self.visit)(LeafVisit {
                    leaf: child,
                    t_entry,
                    t_exit,
                })?;
            } else {
                let offset = DVec3::new((c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64) * half;
                self.descend(depth + 1, child, lo + offset, half)?;
            }
        }
        ControlFlow::Continue(())
    }
}
