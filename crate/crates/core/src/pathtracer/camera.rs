use glam::{DVec2, DVec3};

use crate::scene::CameraPose;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: DVec3,
    pub dir: DVec3,
}

impl Ray {
    pub fn new(origin: DVec3, dir: DVec3) -> Self {
        Ray { origin, dir }
    }

    pub fn at(&self, t: f64) -> DVec3 {
        self.origin + t * self.dir
    }
}

/// Pinhole camera for a `width x height` image. Pixel coordinates are
/// continuous with `(0, 0)` at the top-left corner, so pixel `(i, j)` has
/// its center at `(i + 0.5, j + 0.5)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub pose: CameraPose,
    pub vfov: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn new(pose: CameraPose, vfov: f64, width: usize, height: usize) -> Self {
        Camera {
            pose,
            vfov,
            width,
            height,
        }
    }

    fn half_extents(&self) -> DVec2 {
        let ty = (0.5 * self.vfov).tan();
        DVec2::new(ty * self.width as f64 / self.height as f64, ty)
    }

    /// Camera-space direction (not normalized, `z = -1`) through a pixel position.
    pub fn camera_dir(&self, px: DVec2) -> DVec3 {
        let h = self.half_extents();
        let ndc_x = 2.0 * px.x / self.width as f64 - 1.0;
        let ndc_y = 1.0 - 2.0 * px.y / self.height as f64;
        DVec3::new(ndc_x * h.x, ndc_y * h.y, -1.0)
    }

    pub fn generate_ray(&self, px: DVec2) -> Ray {
        let d = self.pose.rotation * self.camera_dir(px).normalize();
        Ray::new(self.pose.position, d)
    }

    /// Point in camera space at view depth `depth` (distance along -Z) behind
    /// pixel position `px`.
    pub fn unproject(&self, px: DVec2, depth: f64) -> DVec3 {
        self.camera_dir(px) * depth
    }

    /// Pixel position of a camera-space point, or `None` behind the camera.
    pub fn project(&self, p_cam: DVec3) -> Option<DVec2> {
        if p_cam.z >= 0.0 {
            return None;
        }
        let h = self.half_extents();
        let depth = -p_cam.z;
        let ndc_x = p_cam.x / (depth * h.x);
        let ndc_y = p_cam.y / (depth * h.y);
        Some(DVec2::new(
            (ndc_x + 1.0) * 0.5 * self.width as f64,
            (1.0 - ndc_y) * 0.5 * self.height as f64,
        ))
    }
}
