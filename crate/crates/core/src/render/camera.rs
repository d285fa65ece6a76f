use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::RenderError;
use crate::mesh::Vec3;

/// Pinhole points at or in front of this camera-space depth are clipped.
pub const NEAR_PLANE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Projection {
    /// `x = scale * X + cx`; no perspective divide.
    WeakPerspective { scale: f64 },
    /// `x = focal * X / Z + cx`.
    Pinhole { focal: f64 },
}

/// World-to-image mapping. Camera space has +X right, +Y down (image rows)
/// and +Z forward.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub projection: Projection,
    pub principal: [f64; 2],
    pub width: u32,
    pub height: u32,
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPoint {
    pub x: f64,
    pub y: f64,
    /// Camera-space Z.
    pub depth: f64,
    pub clipped: bool,
}

impl Camera {
    /// Identity view.
    pub fn new(projection: Projection, principal: [f64; 2], width: u32, height: u32) -> Result<Self, RenderError> {
        let cam = Self {
            projection,
            principal,
            width,
            height,
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Looks at a Y-up body from its +Z side, centering `center` and scaling
    /// so `extent` meters span `fill` of the image height.
    pub fn front_view(kind: CameraKind, width: u32, height: u32, center: Vec3, extent: f64, fill: f64) -> Result<Self, RenderError> {
        const DISTANCE: f64 = 3.0;
        let pixels = fill * height as f64 / extent;
        let projection = match kind {
            CameraKind::WeakPerspective => Projection::WeakPerspective { scale: pixels },
            CameraKind::Pinhole => Projection::Pinhole { focal: pixels * DISTANCE },
        };
        // 180 degrees about X: world up becomes image up, the body faces the camera.
        let rotation = Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
        let cam = Self {
            projection,
            principal: [width as f64 / 2.0, height as f64 / 2.0],
            width,
            height,
            rotation,
            translation: Vec3::new(0.0, 0.0, DISTANCE) - rotation * center,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::InvalidCamera(format!("image size {}x{}", self.width, self.height)));
        }
        let factor = match self.projection {
            Projection::WeakPerspective { scale } => scale,
            Projection::Pinhole { focal } => focal,
        };
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(RenderError::InvalidCamera(format!("non-positive scale/focal {factor}")));
        }
        let r = &self.rotation;
        let orthonormal = (r.transpose() * r - Matrix3::identity()).amax() < 1e-9 && (r.determinant() - 1.0).abs() < 1e-9;
        if !orthonormal {
            return Err(RenderError::InvalidCamera("view rotation is not a proper rotation".into()));
        }
        if !self.principal.iter().chain(self.translation.iter()).all(|v| v.is_finite()) {
            return Err(RenderError::InvalidCamera("non-finite principal point or translation".into()));
        }
        Ok(())
    }

    pub fn is_perspective(&self) -> bool {
        matches!(self.projection, Projection::Pinhole { .. })
    }

    pub fn project(&self, p: &Vec3) -> ProjectedPoint {
        let c = self.rotation * p + self.translation;
        match self.projection {
            Projection::WeakPerspective { scale } => ProjectedPoint {
                x: scale * c.x + self.principal[0],
                y: scale * c.y + self.principal[1],
                depth: c.z,
                clipped: false,
            },
            Projection::Pinhole { focal } => ProjectedPoint {
                x: focal * c.x / c.z + self.principal[0],
                y: focal * c.y / c.z + self.principal[1],
                depth: c.z,
                clipped: c.z <= NEAR_PLANE,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CameraKind {
    #[default]
    WeakPerspective,
    Pinhole,
}

pub fn project_vertices(camera: &Camera, points: &[Vec3]) -> Vec<ProjectedPoint> {
    points.iter().map(|p| camera.project(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_ray_lands_on_principal_point() {
        let cam = Camera::new(Projection::WeakPerspective { scale: 100.0 }, [128.0, 128.0], 256, 256).unwrap();
        let p = cam.project(&Vec3::new(0.0, 0.0, 2.0));
        assert_eq!((p.x, p.y, p.depth, p.clipped), (128.0, 128.0, 2.0, false));
    }

    #[test]
    fn pinhole_divides_by_depth() {
        let cam = Camera::new(Projection::Pinhole { focal: 100.0 }, [64.0, 32.0], 128, 64).unwrap();
        let p = cam.project(&Vec3::new(1.0, 0.0, 2.0));
        assert_eq!(p.x, 100.0 * 0.5 + 64.0);
        assert!(cam.project(&Vec3::new(0.0, 0.0, 0.01)).clipped);
        assert!(!cam.project(&Vec3::new(0.0, 0.0, 0.011)).clipped);
    }

    #[test]
    fn front_view_centers_and_flips_up() {
        let center = Vec3::new(0.1, 0.9, 0.0);
        let cam = Camera::front_view(CameraKind::WeakPerspective, 200, 100, center, 2.0, 0.8).unwrap();
        let c = cam.project(&center);
        assert!((c.x - 100.0).abs() < 1e-12 && (c.y - 50.0).abs() < 1e-12);
        let above = cam.project(&(center + Vec3::new(0.0, 1.0, 0.0)));
        assert!((above.y - 10.0).abs() < 1e-9);
        // Nearer the camera means smaller depth.
        assert!(cam.project(&(center + Vec3::new(0.0, 0.0, 0.5))).depth < c.depth);
    }

    #[test]
    fn bad_cameras_are_rejected() {
        assert!(Camera::new(Projection::Pinhole { focal: 0.0 }, [0.0, 0.0], 8, 8).is_err());
        assert!(Camera::new(Projection::WeakPerspective { scale: 1.0 }, [0.0, 0.0], 0, 8).is_err());
        let mut cam = Camera::new(Projection::WeakPerspective { scale: 1.0 }, [0.0, 0.0], 8, 8).unwrap();
        cam.rotation = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(cam.validate().is_err());
    }
}
