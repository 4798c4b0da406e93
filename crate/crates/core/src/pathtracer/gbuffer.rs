use glam::{DVec2, DVec3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::Camera;
use super::geometry::SceneGeometry;
use crate::image::Image;
use crate::radiometry::Rgb;

/// View-space depth window that maps to `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRange {
    pub z_min: f64,
    pub z_max: f64,
}

impl DepthRange {
    /// Range over the hit pixels of all frames, or `None` if nothing was hit.
    pub fn over<'a>(frames: impl IntoIterator<Item = &'a RawGBuffer>) -> Option<DepthRange> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for f in frames {
            for (z, hit) in f.view_depth.pixels().iter().zip(f.hit.pixels()) {
                if *hit {
                    lo = lo.min(*z);
                    hi = hi.max(*z);
                }
            }
        }
        (lo <= hi).then_some(DepthRange { z_min: lo, z_max: hi })
    }

    /// Ranges narrower than float noise count as constant depth.
    pub fn is_degenerate(&self) -> bool {
        self.z_max - self.z_min <= 1e-9 * self.z_max.abs().max(1.0)
    }

    /// A constant-depth range maps every hit to -1.
    pub fn normalize(&self, z: f64) -> f64 {
        let span = self.z_max - self.z_min;
        if !self.is_degenerate() {
            (2.0 * (z - self.z_min) / span - 1.0).clamp(-1.0, 1.0)
        } else {
            -1.0
        }
    }

    pub fn denormalize(&self, d: f64) -> f64 {
        self.z_min + 0.5 * (d + 1.0) * (self.z_max - self.z_min)
    }
}

/// Primary-hit attributes before depth normalization. Depth is the distance
/// along the camera's viewing axis.
#[derive(Clone, Debug)]
pub struct RawGBuffer {
    pub normal: Image<DVec3>,
    pub view_depth: Image<f64>,
    pub base_color: Image<Rgb>,
    pub roughness: Image<f64>,
    pub metallic: Image<f64>,
    pub hit: Image<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GBuffer {
    /// Camera-space unit normals; `(0, 0, 0)` on misses.
    pub normal: Image<DVec3>,
    /// Normalized depth in `[-1, 1]`; `1` on misses.
    pub depth: Image<f64>,
    pub base_color: Image<Rgb>,
    pub roughness: Image<f64>,
    pub metallic: Image<f64>,
    pub hit: Image<bool>,
    pub depth_range: DepthRange,
}

impl GBuffer {
    pub fn width(&self) -> usize {
        self.hit.width()
    }

    pub fn height(&self) -> usize {
        self.hit.height()
    }

    pub fn view_depth(&self, x: usize, y: usize) -> f64 {
        self.depth_range.denormalize(*self.depth.get(x, y))
    }
}

impl RawGBuffer {
    pub fn normalize(self, range: DepthRange) -> GBuffer {
        let depth = Image::from_fn(self.view_depth.width(), self.view_depth.height(), |x, y| {
            if *self.hit.get(x, y) {
                range.normalize(*self.view_depth.get(x, y))
            } else {
                1.0
            }
        });
        GBuffer {
            normal: self.normal,
            depth,
            base_color: self.base_color,
            roughness: self.roughness,
            metallic: self.metallic,
            hit: self.hit,
            depth_range: range,
        }
    }
}

/// Traces one ray through every pixel center.
pub fn render_gbuffer_raw(geometry: &SceneGeometry, camera: &Camera) -> RawGBuffer {
    let (w, h) = (camera.width, camera.height);
    let w2c = camera.pose.rotation.conjugate();
    let rows: Vec<Vec<(DVec3, f64, Rgb, f64, f64, bool)>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let ray = camera.generate_ray(DVec2::new(x as f64 + 0.5, y as f64 + 0.5));
                    match geometry.intersect(&ray, f64::INFINITY) {
                        Some(hit) => {
                            let n = (w2c * hit.shading_normal).normalize();
                            let p_cam = camera.pose.to_camera_point(hit.position);
                            let p = hit.params;
                            (n, -p_cam.z, p.base_color, p.roughness, p.metallic, true)
                        }
                        None => (DVec3::ZERO, 0.0, Rgb::BLACK, 0.0, 0.0, false),
                    }
                })
                .collect()
        })
        .collect();
    let px: Vec<_> = rows.into_iter().flatten().collect();
    RawGBuffer {
        normal: plane(&px, w, h, |p| p.0),
        view_depth: plane(&px, w, h, |p| p.1),
        base_color: plane(&px, w, h, |p| p.2),
        roughness: plane(&px, w, h, |p| p.3),
        metallic: plane(&px, w, h, |p| p.4),
        hit: plane(&px, w, h, |p| p.5),
    }
}

fn plane<T, U>(px: &[T], w: usize, h: usize, f: impl Fn(&T) -> U) -> Image<U> {
    Image::from_fn(w, h, |x, y| f(&px[y * w + x]))
}

/// Normalizes a clip's raw buffers with one shared depth range.
pub fn normalize_clip(frames: Vec<RawGBuffer>) -> Vec<GBuffer> {
    let range = DepthRange::over(&frames).unwrap_or(DepthRange { z_min: 0.0, z_max: 0.0 });
    frames.into_iter().map(|f| f.normalize(range)).collect()
}
