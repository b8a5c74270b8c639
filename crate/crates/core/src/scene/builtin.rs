//! Small scenes that live inside the unit cube and are cheap enough for
//! brute-force oracles.

use std::collections::HashMap;

use glam::DVec3;

use super::{Material, Scene, Triangle, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinScene {
    ThreeQuads,
    Icosphere,
    EdgeOnPlane,
    CornellBox,
}

impl BuiltinScene {
    pub const ALL: [BuiltinScene; 4] = [
        BuiltinScene::ThreeQuads,
        BuiltinScene::Icosphere,
        BuiltinScene::EdgeOnPlane,
        BuiltinScene::CornellBox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinScene::ThreeQuads => "three-quads",
            BuiltinScene::Icosphere => "icosphere",
            BuiltinScene::EdgeOnPlane => "edge-on-plane",
            BuiltinScene::CornellBox => "cornell-box",
        }
    }

    pub fn build(self) -> Scene {
        match self {
            BuiltinScene::ThreeQuads => three_quads(),
            BuiltinScene::Icosphere => icosphere(2),
            BuiltinScene::EdgeOnPlane => edge_on_plane(),
            BuiltinScene::CornellBox => cornell_box(),
        }
    }

    /// True for the scenes made of closed surfaces.
    pub fn is_closed(self) -> bool {
        matches!(self, BuiltinScene::Icosphere | BuiltinScene::CornellBox)
    }
}

impl std::str::FromStr for BuiltinScene {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| format!("unknown builtin scene {s:?}"))
    }
}

fn push_quad(out: &mut Vec<Triangle>, p: [DVec3; 4], material: u32, object: u32) {
    out.push(Triangle::flat([p[0], p[1], p[2]], material, object));
    out.push(Triangle::flat([p[0], p[2], p[3]], material, object));
}

fn push_box(out: &mut Vec<Triangle>, lo: DVec3, hi: DVec3, material: u32, object: u32, inward: bool) {
    let c = |x: f64, y: f64, z: f64| DVec3::new(x, y, z);
    let (x0, y0, z0, x1, y1, z1) = (lo.x, lo.y, lo.z, hi.x, hi.y, hi.z);
    let faces = [
        [c(x0, y0, z0), c(x0, y0, z1), c(x0, y1, z1), c(x0, y1, z0)],
        [c(x1, y0, z0), c(x1, y1, z0), c(x1, y1, z1), c(x1, y0, z1)],
        [c(x0, y0, z0), c(x1, y0, z0), c(x1, y0, z1), c(x0, y0, z1)],
        [c(x0, y1, z0), c(x0, y1, z1), c(x1, y1, z1), c(x1, y1, z0)],
        [c(x0, y0, z0), c(x0, y1, z0), c(x1, y1, z0), c(x1, y0, z0)],
        [c(x0, y0, z1), c(x1, y0, z1), c(x1, y1, z1), c(x0, y1, z1)],
    ];
    for mut f in faces {
        if inward {
            f.reverse();
        }
        push_quad(out, f, material, object);
    }
}

/// Three overlapping translucent quads facing +z. Submission order is
/// green, red, blue while depth order seen from +z is red, green, blue.
/// Object ids follow submission order; every material has alpha 1/3.
pub fn three_quads() -> Scene {
    let quad = |lo: f64, hi: f64, z: f64| {
        [
            DVec3::new(lo, lo, z),
            DVec3::new(hi, lo, z),
            DVec3::new(hi, hi, z),
            DVec3::new(lo, hi, z),
        ]
    };
    let mut tris = Vec::new();
    push_quad(&mut tris, quad(0.25, 0.75, 0.5), 0, 0);
    push_quad(&mut tris, quad(0.10, 0.60, 0.75), 1, 1);
    push_quad(&mut tris, quad(0.40, 0.90, 0.25), 2, 2);
    let third = 1.0 / 3.0;
    let materials = vec![
        Material::diffuse(DVec3::new(0.0, 1.0, 0.0)).with_alpha(third),
        Material::diffuse(DVec3::new(1.0, 0.0, 0.0)).with_alpha(third),
        Material::diffuse(DVec3::new(0.0, 0.0, 1.0)).with_alpha(third),
    ];
    Scene::new(tris, materials).expect("non-empty")
}

/// Geodesic sphere of radius 0.4 around the cube center with smooth normals.
/// Faces are split into eight objects by the octant of their centroid.
pub fn icosphere(subdivisions: u32) -> Scene {
    let center = DVec3::splat(0.5);
    let radius = 0.4;
    let phi = (1.0 + 5f64.sqrt()) * 0.5;
    let mut verts: Vec<DVec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| DVec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<DVec3>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let palette = [
        DVec3::new(0.9, 0.2, 0.2),
        DVec3::new(0.2, 0.9, 0.2),
        DVec3::new(0.2, 0.2, 0.9),
        DVec3::new(0.9, 0.9, 0.2),
        DVec3::new(0.9, 0.2, 0.9),
        DVec3::new(0.2, 0.9, 0.9),
        DVec3::new(0.9, 0.6, 0.3),
        DVec3::new(0.6, 0.6, 0.6),
    ];
    let tris = faces
        .iter()
        .map(|f| {
            let dirs = f.map(|i| verts[i]);
            let centroid = dirs[0] + dirs[1] + dirs[2];
            let octant = (centroid.x > 0.0) as u32
                | ((centroid.y > 0.0) as u32) << 1
                | ((centroid.z > 0.0) as u32) << 2;
            Triangle::new(
                dirs.map(|d| Vertex::new(center + d * radius, d)),
                octant,
                octant,
            )
        })
        .collect();
    let materials = palette
        .iter()
        .map(|&c| Material::diffuse(c).with_specular(DVec3::splat(0.3), 24.0))
        .collect();
    Scene::new(tris, materials).expect("non-empty")
}

/// A single square in the plane x = 0.5, parallel to the y and z axes.
pub fn edge_on_plane() -> Scene {
    let (lo, hi) = (1.0 / 64.0, 63.0 / 64.0);
    let mut tris = Vec::new();
    push_quad(
        &mut tris,
        [
            DVec3::new(0.5, lo, lo),
            DVec3::new(0.5, hi, lo),
            DVec3::new(0.5, hi, hi),
            DVec3::new(0.5, lo, hi),
        ],
        0,
        0,
    );
    Scene::new(tris, vec![Material::default()]).expect("non-empty")
}

/// A closed room with colored side walls and two closed blocks inside.
pub fn cornell_box() -> Scene {
    let (lo, hi) = (0.05, 0.95);
    let v = DVec3::new;
    let mut tris = Vec::new();
    // walls face inwards; left red, right green, the rest white
    let walls: [[DVec3; 4]; 6] = [
        [v(lo, lo, lo), v(lo, hi, lo), v(lo, hi, hi), v(lo, lo, hi)],
        [v(hi, lo, lo), v(hi, lo, hi), v(hi, hi, hi), v(hi, hi, lo)],
        [v(lo, lo, lo), v(lo, lo, hi), v(hi, lo, hi), v(hi, lo, lo)],
        [v(lo, hi, lo), v(hi, hi, lo), v(hi, hi, hi), v(lo, hi, hi)],
        [v(lo, lo, lo), v(hi, lo, lo), v(hi, hi, lo), v(lo, hi, lo)],
        [v(lo, lo, hi), v(lo, hi, hi), v(hi, hi, hi), v(hi, lo, hi)],
    ];
    for (i, w) in walls.into_iter().enumerate() {
        let (material, object) = match i {
            0 => (1, 0),
            1 => (2, 1),
            _ => (0, 2),
        };
        push_quad(&mut tris, w, material, object);
    }
    push_box(&mut tris, v(0.2, lo, 0.25), v(0.45, 0.65, 0.5), 3, 3, false);
    push_box(&mut tris, v(0.55, lo, 0.5), v(0.8, 0.35, 0.75), 3, 4, false);
    let materials = vec![
        Material::diffuse(DVec3::splat(0.75)),
        Material::diffuse(DVec3::new(0.75, 0.15, 0.15)),
        Material::diffuse(DVec3::new(0.15, 0.75, 0.15)),
        Material::diffuse(DVec3::splat(0.6)).with_specular(DVec3::splat(0.2), 16.0),
    ];
    Scene::new(tris, materials).expect("non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Aabb;

    #[test]
    fn builtins_live_in_unit_cube() {
        for b in BuiltinScene::ALL {
            let s = b.build();
            assert!(Aabb::UNIT.contains(s.bounds.min) && Aabb::UNIT.contains(s.bounds.max));
            assert!(s.bounds.max.max_element() < 1.0, "{}", b.name());
            assert_eq!(b.name().parse::<BuiltinScene>().unwrap(), b);
        }
    }

    #[test]
    fn icosphere_normals_point_outward() {
        let s = icosphere(2);
        assert_eq!(s.triangles.len(), 320);
        for t in &s.triangles {
            let c = (t.positions().iter().copied().sum::<DVec3>()) / 3.0 - DVec3::splat(0.5);
            assert!(t.face_normal.dot(c) > 0.0);
            for v in t.vertices {
                assert!((v.normal.length() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(s.object_count(), 8);
    }

    #[test]
    fn closed_meshes_have_paired_edges() {
        for b in [BuiltinScene::Icosphere, BuiltinScene::CornellBox] {
            let s = b.build();
            let key = |p: DVec3| (p * 1e9).round().as_ivec3().to_array();
            let mut edges: HashMap<_, i32> = HashMap::new();
            for t in &s.triangles {
                let p = t.positions();
                for i in 0..3 {
                    let (a, b) = (key(p[i]), key(p[(i + 1) % 3]));
                    *edges.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
            assert!(edges.values().all(|&n| n % 2 == 0), "{}", b.name());
        }
    }

    #[test]
    fn box_faces_point_outward() {
        let mut tris = Vec::new();
        push_box(&mut tris, DVec3::splat(0.2), DVec3::splat(0.6), 0, 0, false);
        for t in &tris {
            let c = t.positions().iter().copied().sum::<DVec3>() / 3.0 - DVec3::splat(0.4);
            assert!(t.face_normal.dot(c) > 0.0);
        }
    }
}
