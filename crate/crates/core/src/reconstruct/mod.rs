//! Local shading, alpha compositing and the two rasterization-based
//! reconstructions: point splatting of a fragment pool and the deferred
//! shading baseline rendered straight from the triangles.

mod deferred;
mod image;
mod splat;

use glam::{DVec3, DVec4};
use thiserror::Error;

use crate::scene::Material;

pub use deferred::{deferred_baseline, geometry_pass, lighting_pass, GBuffer, GBufferTexel};
pub use image::{ImageBuffer, ImageError};
pub use splat::{splat_render, SplatConfig};

#[derive(Debug, Error, PartialEq)]
pub enum LightError {
    #[error("light direction has zero length")]
    ZeroDirection,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LightKind {
    /// `direction` points from the surface towards the light.
    Directional { direction: DVec3 },
    Point { position: DVec3 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Light {
    pub kind: LightKind,
    pub color: DVec3,
    pub ambient: DVec3,
}

impl Light {
    pub fn directional(towards_light: DVec3, color: DVec3, ambient: DVec3) -> Result<Self, LightError> {
        let direction = towards_light.try_normalize().ok_or(LightError::ZeroDirection)?;
        Ok(Self {
            kind: LightKind::Directional { direction },
            color,
            ambient,
        })
    }

    pub fn point(position: DVec3, color: DVec3, ambient: DVec3) -> Self {
        Self {
            kind: LightKind::Point { position },
            color,
            ambient,
        }
    }

    /// Unit vector from `p` towards the light and the distance to it
    /// (infinite for directional lights).
    pub fn incidence(&self, p: DVec3) -> (DVec3, f64) {
        match self.kind {
            LightKind::Directional { direction } => (direction, f64::INFINITY),
            LightKind::Point { position } => {
                let d = position - p;
                let len = d.length();
                (d.try_normalize().unwrap_or(DVec3::Z), len)
            }
        }
    }
}

/// White key light from the upper front right with a dim ambient term.
pub fn default_lights() -> Vec<Light> {
    vec![Light::directional(DVec3::new(0.3, 0.5, 1.0), DVec3::ONE, DVec3::splat(0.15)).unwrap()]
}

/// Unclamped Blinn-Phong contributions of one light.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadingTerms {
    pub ambient: DVec3,
    pub direct: DVec3,
}

pub fn shading_terms(position: DVec3, normal: DVec3, material: &Material, light: &Light, to_eye: DVec3) -> ShadingTerms {
    let (l, _) = light.incidence(position);
    let n_dot_l = normal.dot(l).max(0.0);
    let h = (l + to_eye).normalize_or_zero();
    let spec = if material.specular == DVec3::ZERO {
        0.0
    } else {
        normal.dot(h).max(0.0).powf(material.shininess)
    };
    ShadingTerms {
        ambient: light.ambient * material.diffuse,
        direct: (material.diffuse * n_dot_l + material.specular * spec) * light.color,
    }
}

/// Blinn-Phong shading of one light; `to_eye` is the unit vector from
/// `position` towards the viewer.
pub fn shade(position: DVec3, normal: DVec3, material: &Material, light: &Light, to_eye: DVec3) -> DVec3 {
    let t = shading_terms(position, normal, material, light, to_eye);
    (t.ambient + t.direct).clamp(DVec3::ZERO, DVec3::ONE)
}

/// Sum over `lights`, each direct term scaled by `visibility(light)`.
pub fn shade_lights(
    position: DVec3,
    normal: DVec3,
    material: &Material,
    lights: &[Light],
    to_eye: DVec3,
    mut visibility: impl FnMut(&Light) -> f64,
) -> DVec3 {
    let mut rgb = DVec3::ZERO;
    for light in lights {
        let t = shading_terms(position, normal, material, light, to_eye);
        let v = if t.direct == DVec3::ZERO { 1.0 } else { visibility(light) };
        rgb += t.ambient + t.direct * v;
    }
    rgb.clamp(DVec3::ZERO, DVec3::ONE)
}

/// Premultiplied rgba from a straight color and its coverage.
pub fn premultiply(rgb: DVec3, alpha: f64) -> DVec4 {
    (rgb * alpha).extend(alpha)
}

/// Porter-Duff over on premultiplied colors.
pub fn composite_over(front: DVec4, back: DVec4) -> DVec4 {
    front + back * (1.0 - front.w)
}

/// Adds `next` (straight color, alpha in `w`) behind the premultiplied
/// accumulation `state`.
pub fn front_to_back_accumulate(state: DVec4, next: DVec4) -> DVec4 {
    let weight = (1.0 - state.w) * next.w;
    DVec4::new(
        state.x + weight * next.x,
        state.y + weight * next.y,
        state.z + weight * next.z,
        state.w + weight,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn white_light(dir: DVec3, ambient: f64) -> Light {
        Light::directional(dir, DVec3::ONE, DVec3::splat(ambient)).unwrap()
    }

    #[test]
    fn full_diffuse() {
        let m = Material::diffuse(DVec3::X);
        let c = shade(DVec3::ZERO, DVec3::Z, &m, &white_light(DVec3::Z, 0.0), DVec3::Z);
        assert_eq!(c, DVec3::X);
    }

    #[test]
    fn ambient_only_when_grazing() {
        let m = Material::diffuse(DVec3::ONE);
        let c = shade(DVec3::ZERO, DVec3::Z, &m, &white_light(DVec3::X, 0.1), DVec3::Z);
        assert!((c - DVec3::splat(0.1)).abs().max_element() < 1e-15);
    }

    #[test]
    fn mirror_configuration_adds_full_specular() {
        let m = Material::diffuse(DVec3::new(0.2, 0.3, 0.4)).with_specular(DVec3::ONE, 1.0);
        let c = shade(DVec3::ZERO, DVec3::Z, &m, &white_light(DVec3::Z, 0.0), DVec3::Z);
        // n.l = 1, n.h = 1: diffuse + specular, clamped to one
        assert_eq!(c, DVec3::ONE);
        let dim = Material::diffuse(DVec3::new(0.2, 0.3, 0.4)).with_specular(DVec3::splat(0.5), 1.0);
        let c = shade(DVec3::ZERO, DVec3::Z, &dim, &white_light(DVec3::Z, 0.0), DVec3::Z);
        assert!((c - DVec3::new(0.7, 0.8, 0.9)).abs().max_element() < 1e-15);
    }

    #[test]
    fn half_vector_falloff() {
        // light at 60 degrees from the normal, viewer along the normal
        let l = DVec3::new(3f64.sqrt() / 2.0, 0.0, 0.5);
        let m = Material {
            diffuse: DVec3::ZERO,
            specular: DVec3::ONE,
            shininess: 2.0,
            alpha: 1.0,
        };
        let c = shade(DVec3::ZERO, DVec3::Z, &m, &white_light(l, 0.0), DVec3::Z);
        let n_dot_h = (l + DVec3::Z).normalize().z;
        assert!((c.x - n_dot_h * n_dot_h).abs() < 1e-12);
    }

    #[test]
    fn point_light_incidence() {
        let light = Light::point(DVec3::new(0.0, 0.0, 2.0), DVec3::ONE, DVec3::ZERO);
        let (l, d) = light.incidence(DVec3::ZERO);
        assert_eq!(l, DVec3::Z);
        assert_eq!(d, 2.0);
        assert_eq!(Light::directional(DVec3::ZERO, DVec3::ONE, DVec3::ZERO), Err(LightError::ZeroDirection));
    }

    #[test]
    fn shadowed_light_keeps_ambient() {
        let m = Material::diffuse(DVec3::ONE);
        let lights = [white_light(DVec3::Z, 0.25)];
        let lit = shade_lights(DVec3::ZERO, DVec3::Z, &m, &lights, DVec3::Z, |_| 1.0);
        let dark = shade_lights(DVec3::ZERO, DVec3::Z, &m, &lights, DVec3::Z, |_| 0.0);
        assert_eq!(lit, DVec3::ONE);
        assert_eq!(dark, DVec3::splat(0.25));
    }

    #[test]
    fn over_identities() {
        let back = premultiply(DVec3::new(0.1, 0.2, 0.3), 0.7);
        let front = premultiply(DVec3::new(0.9, 0.5, 0.1), 1.0);
        assert_eq!(composite_over(front, back), front);
        assert_eq!(composite_over(DVec4::ZERO, back), back);
    }

    #[test]
    fn three_thirds_chain() {
        let third = 1.0 / 3.0;
        let mut acc = DVec4::ZERO;
        for c in [DVec3::X, DVec3::Y, DVec3::Z] {
            acc = front_to_back_accumulate(acc, c.extend(third));
        }
        let want = DVec4::new(1.0 / 3.0, 2.0 / 9.0, 4.0 / 27.0, 19.0 / 27.0);
        assert!((acc - want).abs().max_element() < 1e-15);
    }

    fn rgba() -> impl Strategy<Value = DVec4> {
        (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(r, g, b, a)| DVec4::new(r, g, b, a))
    }

    proptest! {
        #[test]
        fn front_to_back_equals_back_to_front(chain in prop::collection::vec(rgba(), 0..=8)) {
            let ftb = chain.iter().fold(DVec4::ZERO, |acc, &c| front_to_back_accumulate(acc, c));
            let btf = chain
                .iter()
                .rev()
                .fold(DVec4::ZERO, |back, &c| composite_over(premultiply(c.truncate(), c.w), back));
            prop_assert!((ftb - btf).abs().max_element() < 1e-6);
            prop_assert!((0.0..=1.0).contains(&ftb.w));
            prop_assert!(ftb.truncate().max_element() <= ftb.w + 1e-12);
        }

        #[test]
        fn shading_stays_in_unit_range(
            n in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
            l in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
            d in (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64),
            s in 0.0..=1.0f64,
            k in 1.0..128.0f64,
        ) {
            let n = DVec3::new(n.0, n.1, n.2);
            let l = DVec3::new(l.0, l.1, l.2);
            prop_assume!(n.length() > 1e-3 && l.length() > 1e-3);
            let m = Material::diffuse(DVec3::new(d.0, d.1, d.2)).with_specular(DVec3::splat(s), k);
            let light = Light::directional(l, DVec3::splat(2.0), DVec3::splat(0.5)).unwrap();
            let c = shade(DVec3::ZERO, n.normalize(), &m, &light, DVec3::Z);
            prop_assert!(c.min_element() >= 0.0 && c.max_element() <= 1.0);
        }
    }
}
