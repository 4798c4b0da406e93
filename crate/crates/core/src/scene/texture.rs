use std::path::{Path, PathBuf};

use glam::DVec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io;
use crate::radiometry::{srgb_decode, Rgb};

/// Linear texel grid sampled bilinearly with repeat wrapping.
#[derive(Clone, Debug, PartialEq)]
pub struct Texture {
    width: usize,
    height: usize,
    texels: Vec<Rgb>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorSpace {
    #[default]
    Srgb,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Checker,
    Stripes,
    Noise,
    Tiles,
}

/// Seeded texture synthesized on load; the built-in stand-in for a PBR
/// texture library.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProceduralTexture {
    pub pattern: Pattern,
    pub color_a: Rgb,
    pub color_b: Rgb,
    /// Pattern repetitions across one uv tile.
    pub frequency: u32,
    pub seed: u64,
    pub resolution: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TextureRef {
    File {
        path: PathBuf,
        #[serde(default)]
        color_space: ColorSpace,
    },
    Procedural(ProceduralTexture),
}

impl Texture {
    pub fn new(width: usize, height: usize, texels: Vec<Rgb>) -> Self {
        assert_eq!(texels.len(), width * height, "texture dims");
        assert!(width > 0 && height > 0, "empty texture");
        Texture {
            width,
            height,
            texels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Texel at integer coordinates; row 0 is `v = 1` (image top).
    pub fn texel(&self, x: usize, y: usize) -> Rgb {
        self.texels[y * self.width + x]
    }

    /// Bilinear lookup with repeat wrapping. `v = 0` is the bottom of the image.
    pub fn sample(&self, uv: DVec2) -> Rgb {
        let w = self.width as f64;
        let h = self.height as f64;
        let fx = uv.x * w - 0.5;
        let fy = (1.0 - uv.y) * h - 0.5;
        let x0f = fx.floor();
        let y0f = fy.floor();
        let tx = fx - x0f;
        let ty = fy - y0f;
        let wrap = |i: f64, n: usize| (i as i64).rem_euclid(n as i64) as usize;
        let x0 = wrap(x0f, self.width);
        let x1 = (x0 + 1) % self.width;
        let y0 = wrap(y0f, self.height);
        let y1 = (y0 + 1) % self.height;
        let top = self.texel(x0, y0).lerp(self.texel(x1, y0), tx);
        let bottom = self.texel(x0, y1).lerp(self.texel(x1, y1), tx);
        top.lerp(bottom, ty)
    }

    pub fn load(r: &TextureRef, base_dir: &Path) -> Result<Texture> {
        match r {
            TextureRef::File { path, color_space } => {
                let path = base_dir.join(path);
                let (w, h, mut texels) = io::read_image_rgb(&path)?;
                if *color_space == ColorSpace::Srgb {
                    for t in &mut texels {
                        *t = t.map(srgb_decode);
                    }
                }
                for t in &mut texels {
                    *t = t.map(|v| v.clamp(0.0, 1.0));
                }
                Ok(Texture::new(w, h, texels))
            }
            TextureRef::Procedural(p) => Ok(p.rasterize()),
        }
    }
}

impl ProceduralTexture {
    pub fn rasterize(&self) -> Texture {
        let n = self.resolution.max(1);
        let f = self.frequency.max(1) as f64;
        let noise = ValueNoise::new(self.seed, self.frequency.max(1) as usize);
        let mut texels = Vec::with_capacity(n * n);
        for y in 0..n {
            for x in 0..n {
                let u = (x as f64 + 0.5) / n as f64;
                let v = 1.0 - (y as f64 + 0.5) / n as f64;
                let t = match self.pattern {
                    Pattern::Checker => {
                        let c = (u * f).floor() as i64 + (v * f).floor() as i64;
                        if c.rem_euclid(2) == 0 { 0.0 } else { 1.0 }
                    }
                    Pattern::Stripes => 0.5 + 0.5 * (std::f64::consts::TAU * u * f).sin(),
                    Pattern::Noise => noise.fbm(u, v),
                    Pattern::Tiles => {
                        let (fu, fv) = ((u * f).fract(), (v * f * 2.0).fract());
                        let grout = fu < 0.06 || fv < 0.06;
                        if grout { 1.0 } else { 0.15 * noise.fbm(u, v) }
                    }
                };
                texels.push(self.color_a.lerp(self.color_b, t).map(|c| c.clamp(0.0, 1.0)));
            }
        }
        Texture::new(n, n, texels)
    }
}

/// Tileable lattice value noise.
struct ValueNoise {
    period: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(seed: u64, period: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let period = period.max(2) * 2;
        ValueNoise {
            period,
            lattice: (0..period * period).map(|_| rng.gen::<f64>()).collect(),
        }
    }

    fn at(&self, x: i64, y: i64, period: usize) -> f64 {
        let px = x.rem_euclid(period as i64) as usize;
        let py = y.rem_euclid(period as i64) as usize;
        self.lattice[(py % self.period) * self.period + px % self.period]
    }

    fn octave(&self, u: f64, v: f64, period: usize) -> f64 {
        let (x, y) = (u * period as f64, v * period as f64);
        let (x0, y0) = (x.floor(), y.floor());
        let s = |t: f64| t * t * (3.0 - 2.0 * t);
        let (tx, ty) = (s(x - x0), s(y - y0));
        let (xi, yi) = (x0 as i64, y0 as i64);
        let a = self.at(xi, yi, period) * (1.0 - tx) + self.at(xi + 1, yi, period) * tx;
        let b = self.at(xi, yi + 1, period) * (1.0 - tx) + self.at(xi + 1, yi + 1, period) * tx;
        a * (1.0 - ty) + b * ty
    }

    fn fbm(&self, u: f64, v: f64) -> f64 {
        let mut sum = 0.0;
        let mut amp = 0.5;
        let mut norm = 0.0;
        let mut period = self.period / 2;
        for _ in 0..3 {
            sum += amp * self.octave(u, v, period);
            norm += amp;
            amp *= 0.5;
            period = (period * 2).min(self.period);
        }
        sum / norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_is_exact_at_texel_centers_and_repeats() {
        let tex = Texture::new(4, 2, (0..8).map(|i| Rgb::splat(i as f64 / 8.0)).collect());
        for y in 0..2 {
            for x in 0..4 {
                let uv = DVec2::new((x as f64 + 0.5) / 4.0, 1.0 - (y as f64 + 0.5) / 2.0);
                assert!((tex.sample(uv).r - tex.texel(x, y).r).abs() < 1e-12);
                let shifted = tex.sample(uv + DVec2::new(3.0, -2.0));
                assert!((shifted.r - tex.texel(x, y).r).abs() < 1e-12);
            }
        }
        // Midway between the last and first column wraps around.
        let mid = tex.sample(DVec2::new(0.0, 0.75));
        assert!((mid.r - 0.5 * (tex.texel(3, 0).r + tex.texel(0, 0).r)).abs() < 1e-12);
    }

    #[test]
    fn procedural_textures_stay_in_unit_range() {
        for pattern in [Pattern::Checker, Pattern::Stripes, Pattern::Noise, Pattern::Tiles] {
            let t = ProceduralTexture {
                pattern,
                color_a: Rgb::new(0.1, 0.2, 0.3),
                color_b: Rgb::new(0.9, 0.7, 1.0),
                frequency: 4,
                seed: 9,
                resolution: 32,
            }
            .rasterize();
            for y in 0..t.height() {
                for x in 0..t.width() {
                    let c = t.texel(x, y);
                    assert!(c.min_component() >= 0.0 && c.max_component() <= 1.0);
                }
            }
        }
    }

    #[test]
    fn noise_tiles_seamlessly() {
        let n = ValueNoise::new(3, 4);
        for i in 0..10 {
            let v = i as f64 / 10.0;
            assert!((n.fbm(0.0, v) - n.fbm(1.0, v)).abs() < 1e-12);
            assert!((n.fbm(v, 0.0) - n.fbm(v, 1.0)).abs() < 1e-12);
        }
    }
}
