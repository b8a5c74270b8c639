//! Triangle scenes, materials, the unit-cube normalization and cameras.

mod builtin;
mod camera;
mod obj;

use glam::DVec3;
use thiserror::Error;

pub use builtin::{cornell_box, edge_on_plane, icosphere, three_quads, BuiltinScene};
pub use camera::{capture_camera, Axis, Camera, CameraError, Lens};
pub use obj::{load_scene, parse_material_table, parse_scene};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scene contains no faces")]
    Empty,
    #[error("scene bounds have zero extent on every axis")]
    DegenerateBounds,
    #[error("margin {0} outside [0, 0.25)")]
    BadMargin(f64),
    #[error("triangle {triangle} references material {material} but only {count} exist")]
    MaterialOutOfRange { triangle: usize, material: u32, count: usize },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vertex {
    pub position: DVec3,
    pub normal: DVec3,
}

impl Vertex {
    pub fn new(position: DVec3, normal: DVec3) -> Self {
        Self { position, normal }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub vertices: [Vertex; 3],
    pub material_id: u32,
    pub object_id: u32,
    /// Unit geometric normal, or zero for a degenerate triangle.
    pub face_normal: DVec3,
}

impl Triangle {
    pub fn new(vertices: [Vertex; 3], material_id: u32, object_id: u32) -> Self {
        let face_normal = face_normal(
            vertices[0].position,
            vertices[1].position,
            vertices[2].position,
        );
        Self {
            vertices,
            material_id,
            object_id,
            face_normal,
        }
    }

    /// Builds a triangle whose vertex normals all equal the face normal.
    pub fn flat(positions: [DVec3; 3], material_id: u32, object_id: u32) -> Self {
        let n = face_normal(positions[0], positions[1], positions[2]);
        Self::new(positions.map(|p| Vertex::new(p, n)), material_id, object_id)
    }

    pub fn positions(&self) -> [DVec3; 3] {
        self.vertices.map(|v| v.position)
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = self.positions();
        0.5 * (b - a).cross(c - a).length()
    }

    pub fn perimeter(&self) -> f64 {
        let [a, b, c] = self.positions();
        a.distance(b) + b.distance(c) + c.distance(a)
    }

    pub fn is_degenerate(&self) -> bool {
        self.face_normal == DVec3::ZERO
    }
}

pub(crate) fn face_normal(a: DVec3, b: DVec3, c: DVec3) -> DVec3 {
    let n = (b - a).cross(c - a);
    let len = n.length();
    if len > 0.0 && len.is_finite() {
        n / len
    } else {
        DVec3::ZERO
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    pub diffuse: DVec3,
    pub specular: DVec3,
    pub shininess: f64,
    pub alpha: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self {
            diffuse: DVec3::splat(0.8),
            specular: DVec3::ZERO,
            shininess: 32.0,
            alpha: 1.0,
        }
    }
}

impl Material {
    pub fn diffuse(rgb: DVec3) -> Self {
        Self {
            diffuse: rgb,
            ..Self::default()
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_specular(mut self, specular: DVec3, shininess: f64) -> Self {
        self.specular = specular;
        self.shininess = shininess;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: DVec3,
    pub max: DVec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: DVec3::splat(f64::INFINITY),
        max: DVec3::splat(f64::NEG_INFINITY),
    };

    pub const UNIT: Aabb = Aabb {
        min: DVec3::ZERO,
        max: DVec3::ONE,
    };

    pub fn from_points(points: impl IntoIterator<Item = DVec3>) -> Self {
        points.into_iter().fold(Self::EMPTY, |b, p| Aabb {
            min: b.min.min(p),
            max: b.max.max(p),
        })
    }

    pub fn center(&self) -> DVec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> DVec3 {
        self.max - self.min
    }

    pub fn contains(&self, p: DVec3) -> bool {
        p.cmpge(self.min).all() && p.cmple(self.max).all()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub triangles: Vec<Triangle>,
    pub materials: Vec<Material>,
    pub bounds: Aabb,
}

impl Scene {
    pub fn new(triangles: Vec<Triangle>, materials: Vec<Material>) -> Result<Self, SceneError> {
        if triangles.is_empty() {
            return Err(SceneError::Empty);
        }
        for (i, t) in triangles.iter().enumerate() {
            if t.material_id as usize >= materials.len() {
                return Err(SceneError::MaterialOutOfRange {
                    triangle: i,
                    material: t.material_id,
                    count: materials.len(),
                });
            }
        }
        let bounds = Aabb::from_points(triangles.iter().flat_map(|t| t.positions()));
        Ok(Self {
            triangles,
            materials,
            bounds,
        })
    }

    pub fn material(&self, id: u32) -> &Material {
        &self.materials[id as usize]
    }

    /// One past the largest object id in use.
    pub fn object_count(&self) -> u32 {
        self.triangles
            .iter()
            .map(|t| t.object_id + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn transformed(&self, map: &Similarity) -> Scene {
        let triangles = self
            .triangles
            .iter()
            .map(|t| {
                let vertices = t.vertices.map(|v| Vertex::new(map.apply(v.position), v.normal));
                Triangle {
                    vertices,
                    ..*t
                }
            })
            .collect::<Vec<_>>();
        let bounds = Aabb::from_points(triangles.iter().flat_map(|t| t.positions()));
        Scene {
            triangles,
            materials: self.materials.clone(),
            bounds,
        }
    }
}

/// Uniform scale followed by a translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub translation: DVec3,
}

impl Similarity {
    pub const IDENTITY: Similarity = Similarity {
        scale: 1.0,
        translation: DVec3::ZERO,
    };

    pub fn apply(&self, p: DVec3) -> DVec3 {
        p * self.scale + self.translation
    }

    pub fn inverse(&self) -> Similarity {
        Similarity {
            scale: 1.0 / self.scale,
            translation: -self.translation / self.scale,
        }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.scale - 1.0).abs() <= tol && self.translation.abs().max_element() <= tol
    }
}

/// Margin used by the bundled scenes and the CLI so that no vertex sits on
/// the upper face of the unit cube.
pub const DEFAULT_MARGIN: f64 = 1.0 / 64.0;

/// Maps the scene bounds into `[margin, 1 - margin]^3`, longest axis first,
/// the other axes centered.
pub fn normalize_scene(scene: &Scene, margin: f64) -> Result<(Scene, Similarity), SceneError> {
    if !(0.0..0.25).contains(&margin) {
        return Err(SceneError::BadMargin(margin));
    }
    if scene.triangles.is_empty() {
        return Err(SceneError::Empty);
    }
    let longest = scene.bounds.extent().max_element();
    if !(longest > 0.0) {
        return Err(SceneError::DegenerateBounds);
    }
    let scale = (1.0 - 2.0 * margin) / longest;
    let translation = DVec3::splat(0.5) - scene.bounds.center() * scale;
    let map = Similarity { scale, translation };
    Ok((scene.transformed(&map), map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri_scene(points: &[[f64; 3]]) -> Scene {
        let tris = points
            .chunks(3)
            .map(|c| {
                Triangle::flat(
                    [c[0].into(), c[1].into(), c[2].into()],
                    0,
                    0,
                )
            })
            .collect();
        Scene::new(tris, vec![Material::default()]).unwrap()
    }

    #[test]
    fn unit_cube_scene_normalizes_to_identity() {
        let s = tri_scene(&[[0.0, 0.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.5]]);
        let (_, map) = normalize_scene(&s, 0.0).unwrap();
        assert!(map.is_identity(1e-12));
    }

    #[test]
    fn centered_cube_translates_by_half() {
        let s = tri_scene(&[[-0.5, -0.5, -0.5], [0.5, -0.5, 0.5], [-0.5, 0.5, 0.0]]);
        let (_, map) = normalize_scene(&s, 0.0).unwrap();
        assert_eq!(map.scale, 1.0);
        assert_eq!(map.translation, DVec3::splat(0.5));
    }

    #[test]
    fn elongated_scene_scales_longest_axis() {
        let s = tri_scene(&[[0.0, 0.0, 0.0], [2.0, 1.0, 0.0], [0.0, 1.0, 1.0]]);
        let (n, map) = normalize_scene(&s, 0.0).unwrap();
        assert_eq!(map.scale, 0.5);
        let b = Aabb::from_points(n.triangles.iter().flat_map(|t| t.positions()));
        assert_eq!(b.min, DVec3::new(0.0, 0.25, 0.25));
        assert_eq!(b.max, DVec3::new(1.0, 0.75, 0.75));
    }

    #[test]
    fn normalize_rejects_point_scene_and_bad_margin() {
        let s = tri_scene(&[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]);
        assert!(matches!(
            normalize_scene(&s, 0.0),
            Err(SceneError::DegenerateBounds)
        ));
        assert!(matches!(
            normalize_scene(&s, 0.25),
            Err(SceneError::BadMargin(_))
        ));
    }

    #[test]
    fn normalize_is_idempotent() {
        let s = tri_scene(&[[-3.0, 2.0, 7.0], [5.0, -1.0, 7.5], [0.0, 4.0, 9.0]]);
        for margin in [0.0, DEFAULT_MARGIN, 0.1] {
            let (once, _) = normalize_scene(&s, margin).unwrap();
            let (_, second) = normalize_scene(&once, margin).unwrap();
            assert!(second.is_identity(1e-9), "{second:?}");
        }
    }

    #[test]
    fn similarity_inverse_roundtrips() {
        let m = Similarity {
            scale: 0.37,
            translation: DVec3::new(0.1, -2.0, 3.0),
        };
        let p = DVec3::new(4.0, 5.0, -6.0);
        assert!(m.inverse().apply(m.apply(p)).distance(p) < 1e-12);
    }

    #[test]
    fn scene_rejects_out_of_range_material() {
        let t = Triangle::flat([DVec3::ZERO, DVec3::X, DVec3::Y], 3, 0);
        assert!(matches!(
            Scene::new(vec![t], vec![Material::default()]),
            Err(SceneError::MaterialOutOfRange { material: 3, .. })
        ));
        assert!(matches!(Scene::new(vec![], vec![]), Err(SceneError::Empty)));
    }

    #[test]
    fn bounds_contain_every_vertex() {
        let s = tri_scene(&[[0.3, -1.0, 2.0], [5.0, 0.0, 0.0], [1.0, 1.0, 1.0]]);
        for t in &s.triangles {
            for p in t.positions() {
                assert!(s.bounds.contains(p));
            }
        }
    }
}
