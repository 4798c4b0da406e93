use std::f64::consts::{FRAC_PI_2, TAU};

use glam::DVec3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EnvironmentMap, Rgb};
use crate::error::Result;

/// Analytic sky with a sun disk; the built-in environment pool when no
/// HDRI directory is configured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkyParams {
    pub height: usize,
    pub zenith: Rgb,
    pub horizon: Rgb,
    pub ground: Rgb,
    /// Radians above the horizon.
    pub sun_elevation: f64,
    /// Radians, same azimuth convention as the equirect mapping.
    pub sun_azimuth: f64,
    /// Angular radius in radians.
    pub sun_radius: f64,
    pub sun_radiance: Rgb,
}

impl SkyParams {
    pub fn random(rng: &mut impl Rng, height: usize) -> Self {
        let warmth = rng.gen_range(0.0..1.0);
        let sky_level = rng.gen_range(0.3..1.5);
        let zenith = Rgb::new(0.25, 0.45, 0.9) * sky_level;
        let horizon = Rgb::new(0.8, 0.8 - 0.15 * warmth, 0.75 - 0.35 * warmth) * sky_level;
        let ground = Rgb::new(0.25, 0.22, 0.18) * rng.gen_range(0.3..1.0);
        let sun_level = rng.gen_range(5.0..60.0);
        SkyParams {
            height,
            zenith,
            horizon,
            ground,
            sun_elevation: rng.gen_range(0.1..1.3),
            sun_azimuth: rng.gen_range(0.0..TAU),
            sun_radius: rng.gen_range(0.03..0.09),
            sun_radiance: Rgb::new(1.0, 0.95 - 0.2 * warmth, 0.9 - 0.4 * warmth) * sun_level,
        }
    }

    pub fn sun_direction(&self) -> DVec3 {
        let (se, ce) = self.sun_elevation.sin_cos();
        let (sa, ca) = self.sun_azimuth.sin_cos();
        DVec3::new(ce * sa, se, -ce * ca)
    }

    pub fn radiance(&self, dir: DVec3) -> Rgb {
        let sun = self.sun_direction();
        let base = if dir.y >= 0.0 {
            let t = (dir.y.asin() / FRAC_PI_2).powf(0.6);
            self.horizon.lerp(self.zenith, t)
        } else {
            let t = (-dir.y).min(1.0).powf(0.3);
            self.horizon.lerp(self.ground, t)
        };
        let angle = dir.dot(sun).clamp(-1.0, 1.0).acos();
        if angle < self.sun_radius {
            base + self.sun_radiance
        } else {
            // Soft aureole keeps the map band-limited enough for bilinear lookups.
            let glow = (-(angle - self.sun_radius) / (3.0 * self.sun_radius)).exp() * 0.05;
            base + self.sun_radiance * glow
        }
    }

    pub fn render(&self) -> Result<EnvironmentMap> {
        let probe = EnvironmentMap::uniform(self.height, Rgb::BLACK)?;
        EnvironmentMap::from_fn(self.height, |x, y| self.radiance(probe.pixel_center_direction(x, y)))
    }
}
