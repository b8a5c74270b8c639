use glam::{DMat4, DVec3, DVec4};
use thiserror::Error;

use super::Scene;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("view direction has zero length")]
    ZeroDirection,
    #[error("up vector is parallel to the view direction")]
    DegenerateUp,
    #[error("near plane {near} must be in front of far plane {far}")]
    DepthRange { near: f64, far: f64 },
    #[error("resolution must be at least 1x1")]
    Resolution,
    #[error("invalid lens parameter {0}")]
    Lens(f64),
}

/// Principal axis a capture camera looks down (towards the negative side).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn unit(self) -> DVec3 {
        match self {
            Axis::X => DVec3::X,
            Axis::Y => DVec3::Y,
            Axis::Z => DVec3::Z,
        }
    }

    fn capture_up(self) -> DVec3 {
        match self {
            Axis::X | Axis::Z => DVec3::Y,
            Axis::Y => DVec3::NEG_Z,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim_start_matches('+').to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(format!("unknown axis {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lens {
    /// `extent` is the world-space height of the view window.
    Orthographic { extent: f64 },
    /// Vertical field of view in radians.
    Perspective { fov_y: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub lens: Lens,
    pub eye: DVec3,
    pub view_dir: DVec3,
    pub up: DVec3,
    pub width: u32,
    pub height: u32,
    pub near: f64,
    pub far: f64,
}

impl Camera {
    pub fn new(
        lens: Lens,
        eye: DVec3,
        view_dir: DVec3,
        up: DVec3,
        (width, height): (u32, u32),
        near: f64,
        far: f64,
    ) -> Result<Self, CameraError> {
        let dir_len = view_dir.length();
        if !(dir_len > 0.0) || !dir_len.is_finite() {
            return Err(CameraError::ZeroDirection);
        }
        let view_dir = view_dir / dir_len;
        let up = up - view_dir * up.dot(view_dir);
        let up_len = up.length();
        if !(up_len > 1e-12) {
            return Err(CameraError::DegenerateUp);
        }
        if !(near < far) {
            return Err(CameraError::DepthRange { near, far });
        }
        if width == 0 || height == 0 {
            return Err(CameraError::Resolution);
        }
        match lens {
            Lens::Orthographic { extent } if !(extent > 0.0) => {
                return Err(CameraError::Lens(extent))
            }
            Lens::Perspective { fov_y } if !(fov_y > 0.0 && fov_y < std::f64::consts::PI) => {
                return Err(CameraError::Lens(fov_y))
            }
            Lens::Perspective { .. } if !(near > 0.0) => {
                return Err(CameraError::DepthRange { near, far })
            }
            _ => {}
        }
        Ok(Self {
            lens,
            eye,
            view_dir,
            up: up / up_len,
            width,
            height,
            near,
            far,
        })
    }

    /// Perspective camera looking at `target`, with generous depth range.
    pub fn look_at(
        eye: DVec3,
        target: DVec3,
        up: DVec3,
        fov_y: f64,
        resolution: (u32, u32),
    ) -> Result<Self, CameraError> {
        Self::new(
            Lens::Perspective { fov_y },
            eye,
            target - eye,
            up,
            resolution,
            1e-3,
            1e3,
        )
    }

    pub fn right(&self) -> DVec3 {
        self.view_dir.cross(self.up)
    }

    pub fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }

    pub fn is_orthographic(&self) -> bool {
        matches!(self.lens, Lens::Orthographic { .. })
    }

    /// Signed distance of `p` in front of the eye along the view direction.
    pub fn view_depth(&self, p: DVec3) -> f64 {
        (p - self.eye).dot(self.view_dir)
    }

    /// Unit vector from `p` towards the viewer.
    pub fn to_eye(&self, p: DVec3) -> DVec3 {
        match self.lens {
            Lens::Orthographic { .. } => -self.view_dir,
            Lens::Perspective { .. } => (self.eye - p).normalize_or(-self.view_dir),
        }
    }

    /// World-to-clip transform. Clip depth maps `near..far` onto `0..1`.
    pub fn clip_from_world(&self) -> DMat4 {
        let r = self.right();
        let u = self.up;
        let d = self.view_dir;
        let view = rows([
            DVec4::new(r.x, r.y, r.z, -r.dot(self.eye)),
            DVec4::new(u.x, u.y, u.z, -u.dot(self.eye)),
            DVec4::new(d.x, d.y, d.z, -d.dot(self.eye)),
            DVec4::W,
        ]);
        let (n, f) = (self.near, self.far);
        let proj = match self.lens {
            Lens::Orthographic { extent } => {
                let hh = extent * 0.5;
                let hw = hh * self.aspect();
                rows([
                    DVec4::new(1.0 / hw, 0.0, 0.0, 0.0),
                    DVec4::new(0.0, 1.0 / hh, 0.0, 0.0),
                    DVec4::new(0.0, 0.0, 1.0 / (f - n), -n / (f - n)),
                    DVec4::W,
                ])
            }
            Lens::Perspective { fov_y } => {
                let fy = 1.0 / (fov_y * 0.5).tan();
                let fx = fy / self.aspect();
                rows([
                    DVec4::new(fx, 0.0, 0.0, 0.0),
                    DVec4::new(0.0, fy, 0.0, 0.0),
                    DVec4::new(0.0, 0.0, f / (f - n), -f * n / (f - n)),
                    DVec4::Z,
                ])
            }
        };
        proj * view
    }

    /// Raster position (x right, y down, pixel units) and view depth of `p`,
    /// or `None` when `p` is not in front of a perspective eye.
    pub fn project(&self, p: DVec3) -> Option<(f64, f64, f64)> {
        let rel = p - self.eye;
        let depth = rel.dot(self.view_dir);
        let x = rel.dot(self.right());
        let y = rel.dot(self.up);
        let (nx, ny) = match self.lens {
            Lens::Orthographic { extent } => {
                let hh = extent * 0.5;
                (x / (hh * self.aspect()), y / hh)
            }
            Lens::Perspective { fov_y } => {
                if depth <= 0.0 {
                    return None;
                }
                let t = (fov_y * 0.5).tan();
                (x / (depth * t * self.aspect()), y / (depth * t))
            }
        };
        Some((
            (nx + 1.0) * 0.5 * self.width as f64,
            (1.0 - ny) * 0.5 * self.height as f64,
            depth,
        ))
    }

    /// World-space height of one pixel at the given view depth.
    pub fn pixel_size_at(&self, depth: f64) -> f64 {
        match self.lens {
            Lens::Orthographic { extent } => extent / self.height as f64,
            Lens::Perspective { fov_y } => 2.0 * depth * (fov_y * 0.5).tan() / self.height as f64,
        }
    }
}

pub(crate) fn rows(r: [DVec4; 4]) -> DMat4 {
    DMat4::from_cols(r[0], r[1], r[2], r[3]).transpose()
}

/// Orthographic camera at the scene center looking down `-axis`, covering
/// the whole unit cube with a square `resolution`.
pub fn capture_camera(scene: &Scene, axis: Axis, resolution: u32) -> Camera {
    Camera::new(
        Lens::Orthographic { extent: 1.0 },
        scene.bounds.center(),
        -axis.unit(),
        axis.capture_up(),
        (resolution, resolution),
        -1.0,
        1.0,
    )
    .expect("capture camera parameters are valid by construction")
}
