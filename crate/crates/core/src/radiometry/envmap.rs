use std::f64::consts::{PI, TAU};

use glam::DVec3;
use serde::{Deserialize, Serialize};

use super::Rgb;
use crate::error::{Error, Result};
use crate::math::{direction_to_equirect, equirect_direction, is_unit, UNIT_TOLERANCE};

/// Equirectangular HDR radiance map. `width == 2 * height`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentMap {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
    intensity_scale: f64,
}

/// Random augmentation applied to a source probe before rendering.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvAugmentation {
    /// Radians, positive values rotate the map toward +u.
    pub yaw: f64,
    pub flip: bool,
    pub scale: f64,
}

impl Default for EnvAugmentation {
    fn default() -> Self {
        EnvAugmentation {
            yaw: 0.0,
            flip: false,
            scale: 1.0,
        }
    }
}

impl EnvironmentMap {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if height == 0 || width != 2 * height {
            return Err(Error::domain(format!(
                "environment map must be 2:1 equirectangular, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::domain(format!(
                "environment map has {} pixels, expected {}",
                pixels.len(),
                width * height
            )));
        }
        if let Some(bad) = pixels.iter().find(|p| !p.is_valid_radiance()) {
            return Err(Error::InvalidRadiance(format!(
                "environment pixel {bad:?} is negative or non-finite"
            )));
        }
        Ok(EnvironmentMap {
            width,
            height,
            pixels,
            intensity_scale: 1.0,
        })
    }

    pub fn uniform(height: usize, value: Rgb) -> Result<Self> {
        Self::new(2 * height, height, vec![value; 2 * height * height])
    }

    pub fn from_fn(height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Result<Self> {
        let width = 2 * height;
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn with_intensity_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::domain(format!("intensity scale {scale} must be >= 0")));
        }
        self.intensity_scale = scale;
        Ok(self)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn intensity_scale(&self) -> f64 {
        self.intensity_scale
    }

    /// Stored pixel values, without the intensity scale.
    pub fn raw_pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    /// Radiance of a texel including the intensity scale.
    #[inline]
    pub fn texel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x] * self.intensity_scale
    }

    /// Radiance with the intensity scale folded into the pixels.
    pub fn baked(&self) -> EnvironmentMap {
        EnvironmentMap {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|p| *p * self.intensity_scale).collect(),
            intensity_scale: 1.0,
        }
    }

    pub fn pixel_center_uv(&self, x: usize, y: usize) -> (f64, f64) {
        (
            (x as f64 + 0.5) / self.width as f64,
            (y as f64 + 0.5) / self.height as f64,
        )
    }

    pub fn pixel_center_direction(&self, x: usize, y: usize) -> DVec3 {
        let (u, v) = self.pixel_center_uv(x, y);
        equirect_direction(u, v)
    }

    /// Exact solid angle of any texel in row `y`.
    pub fn texel_solid_angle(&self, y: usize) -> f64 {
        let t0 = PI * y as f64 / self.height as f64;
        let t1 = PI * (y + 1) as f64 / self.height as f64;
        TAU / self.width as f64 * (t0.cos() - t1.cos())
    }

    /// Solid-angle weighted integral of radiance over the sphere.
    pub fn integral(&self) -> Rgb {
        let mut sum = Rgb::BLACK;
        for y in 0..self.height {
            let w = self.texel_solid_angle(y);
            let row: Rgb = (0..self.width).map(|x| self.texel(x, y)).sum();
            sum += row * w;
        }
        sum
    }

    /// Bilinear lookup at equirect coordinates with horizontal wrap and
    /// vertical clamping. Exact at texel centers.
    pub fn lookup_uv(&self, u: f64, v: f64) -> Rgb {
        let w = self.width as f64;
        let h = self.height as f64;
        let fx = u * w - 0.5;
        let fy = (v * h - 0.5).clamp(0.0, h - 1.0);
        let x0f = fx.floor();
        let y0f = fy.floor();
        let tx = fx - x0f;
        let ty = fy - y0f;
        let x0 = (x0f as i64).rem_euclid(self.width as i64) as usize;
        let x1 = (x0 + 1) % self.width;
        let y0 = y0f as usize;
        let y1 = (y0 + 1).min(self.height - 1);
        let p = |x: usize, y: usize| self.pixels[y * self.width + x];
        let top = if tx == 0.0 { p(x0, y0) } else { p(x0, y0).lerp(p(x1, y0), tx) };
        let value = if ty == 0.0 {
            top
        } else {
            let bottom = if tx == 0.0 { p(x0, y1) } else { p(x0, y1).lerp(p(x1, y1), tx) };
            top.lerp(bottom, ty)
        };
        value * self.intensity_scale
    }

    /// Radiance arriving from direction `dir`; no unit-length check.
    #[inline]
    pub fn lookup(&self, dir: DVec3) -> Rgb {
        let uv = direction_to_equirect(dir);
        self.lookup_uv(uv.x, uv.y)
    }

    /// Lookup in the map rotated about +Y by `yaw`, matching
    /// `augment_env(self, yaw, false, 1.0).lookup(dir)` up to resampling.
    #[inline]
    pub fn lookup_rotated(&self, dir: DVec3, yaw: f64) -> Rgb {
        let uv = direction_to_equirect(dir);
        self.lookup_uv(uv.x - yaw / TAU, uv.y)
    }
}

/// Radiance of `env` in direction `dir` (bilinear, times the intensity scale).
pub fn sample_env(env: &EnvironmentMap, dir: DVec3) -> Result<Rgb> {
    if !dir.is_finite() || !is_unit(dir, UNIT_TOLERANCE) {
        return Err(Error::domain(format!(
            "environment lookup direction {dir:?} is not unit length"
        )));
    }
    Ok(env.lookup(dir))
}

/// Horizontal rotation by `yaw`, optional mirror, then intensity scaling.
/// Sub-pixel shifts are resampled bilinearly along rows.
pub fn augment_env(env: &EnvironmentMap, yaw: f64, flip: bool, scale: f64) -> Result<EnvironmentMap> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::domain(format!("augmentation scale {scale} must be > 0")));
    }
    if !yaw.is_finite() {
        return Err(Error::domain("augmentation yaw must be finite"));
    }
    let w = env.width;
    let shift = (yaw / TAU * w as f64).rem_euclid(w as f64);
    let mut whole = shift.floor();
    let mut frac = shift - whole;
    if frac >= 1.0 {
        whole += 1.0;
        frac = 0.0;
    }
    let whole = whole as usize % w;

    let mut pixels = Vec::with_capacity(env.pixels.len());
    for y in 0..env.height {
        let row = &env.pixels[y * w..(y + 1) * w];
        for x in 0..w {
            let xs = if flip { w - 1 - x } else { x };
            // shifted[x] = src[x - shift]
            let a = row[(xs + w - whole) % w];
            let value = if frac == 0.0 {
                a
            } else {
                let b = row[(xs + 2 * w - whole - 1) % w];
                a.lerp(b, frac)
            };
            pixels.push(if scale == 1.0 { value } else { value * scale });
        }
    }
    Ok(EnvironmentMap {
        width: w,
        height: env.height,
        pixels,
        intensity_scale: env.intensity_scale,
    })
}

impl EnvAugmentation {
    pub fn apply(&self, env: &EnvironmentMap) -> Result<EnvironmentMap> {
        augment_env(env, self.yaw, self.flip, self.scale)
    }
}
