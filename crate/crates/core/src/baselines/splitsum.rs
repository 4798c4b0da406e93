//! Split-sum image-based lighting: a GGX-prefiltered environment mip chain,
//! a pre-integrated BRDF table and a diffuse irradiance map. No visibility.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use glam::{DVec2, DVec3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{self, Channel, Layer};
use crate::math::{direction_to_equirect, hammersley, reflect, Frame};
use crate::pathtracer::brdf::{alpha_from_roughness, ggx_d, EnergyTable, DIELECTRIC_F0};
use crate::pathtracer::{Camera, GBuffer};
use crate::radiometry::{EnvironmentMap, Rgb};

pub const DEFAULT_LEVELS: usize = 6;
pub const TABLE_SIZE: usize = 64;
const TABLE_SAMPLES: u32 = 1024;
const PREFILTER_SAMPLES: u32 = 512;
const MIN_LEVEL_HEIGHT: usize = 16;
const IRRADIANCE_HEIGHT: usize = 32;
const IRRADIANCE_SOURCE_HEIGHT: usize = 64;

#[derive(Clone, Debug)]
pub struct PrefilteredEnv {
    /// Level `l` is convolved for roughness `l / (levels - 1)`; level 0 is the source.
    pub levels: Vec<EnvironmentMap>,
    /// Cosine-weighted mean radiance around each direction.
    pub irradiance: EnvironmentMap,
    pub table: EnergyTable,
}

pub fn level_roughness(level: usize, levels: usize) -> f64 {
    if levels <= 1 {
        0.0
    } else {
        level as f64 / (levels - 1) as f64
    }
}

/// Box-filtered mip chain of the source, used for filtered importance sampling.
fn source_mips(env: &EnvironmentMap) -> Result<Vec<EnvironmentMap>> {
    let mut mips = vec![env.baked()];
    while mips.last().unwrap().height() > 1 {
        let prev = mips.last().unwrap();
        let h = prev.height() / 2;
        if h == 0 || prev.height() % 2 != 0 {
            break;
        }
        let next = EnvironmentMap::from_fn(h, |x, y| {
            (prev.texel(2 * x, 2 * y)
                + prev.texel(2 * x + 1, 2 * y)
                + prev.texel(2 * x, 2 * y + 1)
                + prev.texel(2 * x + 1, 2 * y + 1))
                * 0.25
        })?;
        mips.push(next);
    }
    Ok(mips)
}

fn lookup_lod(mips: &[EnvironmentMap], dir: DVec3, lod: f64) -> Rgb {
    let lod = lod.clamp(0.0, (mips.len() - 1) as f64);
    let l0 = lod.floor() as usize;
    let l1 = (l0 + 1).min(mips.len() - 1);
    let t = lod - l0 as f64;
    let a = mips[l0].lookup(dir);
    if t == 0.0 {
        a
    } else {
        a.lerp(mips[l1].lookup(dir), t)
    }
}

/// GGX convolution of one direction with `n = v = r`.
fn convolve(mips: &[EnvironmentMap], n: DVec3, alpha: f64, samples: u32) -> Rgb {
    let frame = Frame::from_normal(n);
    let src = &mips[0];
    let texel_omega = 4.0 * PI / (src.width() * src.height()) as f64;
    let a2 = alpha * alpha;
    let mut acc = Rgb::BLACK;
    let mut weight = 0.0;
    for i in 0..samples {
        let u = hammersley(i, samples);
        let cos_h = ((1.0 - u.x) / (1.0 + (a2 - 1.0) * u.x)).sqrt();
        let sin_h = (1.0 - cos_h * cos_h).max(0.0).sqrt();
        let phi = TAU * u.y;
        let h = DVec3::new(sin_h * phi.cos(), sin_h * phi.sin(), cos_h);
        // v = n = +Z locally.
        let l = DVec3::new(2.0 * h.z * h.x, 2.0 * h.z * h.y, 2.0 * h.z * h.z - 1.0);
        if l.z <= 0.0 {
            continue;
        }
        // pdf of l is D(h) / 4 when v = n.
        let pdf = ggx_d(h.z, alpha) * 0.25;
        let sample_omega = 1.0 / (samples as f64 * pdf);
        let lod = 0.5 * (sample_omega / texel_omega).max(1.0).log2() + 1.0;
        acc += lookup_lod(mips, frame.to_world(l), lod) * l.z;
        weight += l.z;
    }
    if weight > 0.0 {
        acc * (1.0 / weight)
    } else {
        mips[0].lookup(n)
    }
}

/// Cosine-weighted average radiance by direct summation over a downsampled copy.
fn irradiance_map(mips: &[EnvironmentMap]) -> Result<EnvironmentMap> {
    let src = mips
        .iter()
        .find(|m| m.height() <= IRRADIANCE_SOURCE_HEIGHT)
        .unwrap_or_else(|| mips.last().unwrap());
    let texels: Vec<(DVec3, Rgb)> = (0..src.height())
        .flat_map(|y| {
            let omega = src.texel_solid_angle(y);
            (0..src.width()).map(move |x| (src.pixel_center_direction(x, y), src.texel(x, y) * omega))
        })
        .collect();
    let weights: Vec<f64> = (0..src.height())
        .flat_map(|y| std::iter::repeat(src.texel_solid_angle(y)).take(src.width()))
        .collect();
    let probe = EnvironmentMap::uniform(IRRADIANCE_HEIGHT, Rgb::BLACK)?;
    let px: Vec<Rgb> = (0..probe.width() * probe.height())
        .into_par_iter()
        .map(|i| {
            let n = probe.pixel_center_direction(i % probe.width(), i / probe.width());
            let mut acc = Rgb::BLACK;
            let mut wsum = 0.0;
            for ((d, l), w) in texels.iter().zip(&weights) {
                let c = n.dot(*d);
                if c > 0.0 {
                    acc += *l * c;
                    wsum += w * c;
                }
            }
            if wsum > 0.0 {
                acc * (1.0 / wsum)
            } else {
                Rgb::BLACK
            }
        })
        .collect();
    EnvironmentMap::new(probe.width(), probe.height(), px)
}

/// Builds the prefiltered chain; level resolution halves per level down to
/// a small floor.
pub fn prefilter_env(env: &EnvironmentMap, levels: usize) -> Result<PrefilteredEnv> {
    if levels == 0 {
        return Err(Error::domain("prefilter needs at least one level"));
    }
    let mips = source_mips(env)?;
    let mut out = vec![mips[0].clone()];
    for l in 1..levels {
        let alpha = alpha_from_roughness(level_roughness(l, levels));
        let h = (env.height() >> l).max(MIN_LEVEL_HEIGHT).min(env.height());
        let probe = EnvironmentMap::uniform(h, Rgb::BLACK)?;
        let px: Vec<Rgb> = (0..probe.width() * probe.height())
            .into_par_iter()
            .map(|i| convolve(&mips, probe.pixel_center_direction(i % probe.width(), i / probe.width()), alpha, PREFILTER_SAMPLES))
            .collect();
        out.push(EnvironmentMap::new(probe.width(), probe.height(), px)?);
    }
    Ok(PrefilteredEnv {
        levels: out,
        irradiance: irradiance_map(&mips)?,
        table: EnergyTable::compute(TABLE_SIZE, TABLE_SAMPLES),
    })
}

impl PrefilteredEnv {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Prefiltered radiance around `dir` for `roughness`, interpolating
    /// between the bracketing levels linearly in GGX alpha.
    pub fn specular(&self, dir: DVec3, roughness: f64) -> Rgb {
        let n = self.levels.len();
        if n == 1 {
            return self.levels[0].lookup(dir);
        }
        let r = roughness.clamp(0.0, 1.0);
        let f = r * (n - 1) as f64;
        let l0 = (f.floor() as usize).min(n - 2);
        let l1 = l0 + 1;
        let a0 = if l0 == 0 { 0.0 } else { alpha_from_roughness(level_roughness(l0, n)) };
        let a1 = alpha_from_roughness(level_roughness(l1, n));
        let t = ((alpha_from_roughness(r) - a0) / (a1 - a0)).clamp(0.0, 1.0);
        let c0 = self.levels[l0].lookup(dir);
        if t == 0.0 {
            c0
        } else {
            c0.lerp(self.levels[l1].lookup(dir), t)
        }
    }

    pub fn irradiance(&self, n: DVec3) -> Rgb {
        self.irradiance.lookup(n)
    }

    /// Writes every level plus the irradiance map as parts of one EXR.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut layers: Vec<Layer> = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, m)| env_layer(m, format!("level{i}")))
            .collect();
        layers.push(env_layer(&self.irradiance, "irradiance".into()));
        io::write_exr(path, &layers)
    }

    pub fn load(path: &Path) -> Result<PrefilteredEnv> {
        let mut layers = io::read_exr(path)?;
        let mut take = |name: &str| -> Result<EnvironmentMap> {
            let pos = layers
                .iter()
                .position(|l| l.name.as_deref() == Some(name))
                .ok_or_else(|| Error::Format(format!("{}: missing part {name}", path.display())))?;
            let l = layers.remove(pos);
            let img = io::layer_to_rgb(&l, None, path)?;
            EnvironmentMap::new(l.width, l.height, img.into_pixels())
        };
        let irradiance = take("irradiance")?;
        let mut levels = Vec::new();
        while let Ok(m) = take(&format!("level{}", levels.len())) {
            levels.push(m);
        }
        if levels.is_empty() {
            return Err(Error::Format(format!("{}: no prefiltered levels", path.display())));
        }
        Ok(PrefilteredEnv {
            levels,
            irradiance,
            table: EnergyTable::compute(TABLE_SIZE, TABLE_SAMPLES),
        })
    }
}

fn env_layer(m: &EnvironmentMap, name: String) -> Layer {
    let baked = m.baked();
    let px = baked.raw_pixels();
    Layer {
        name: Some(name),
        width: baked.width(),
        height: baked.height(),
        channels: ["R", "G", "B"]
            .iter()
            .enumerate()
            .map(|(c, n)| Channel::new(*n, px.iter().map(|p| p.channel(c) as f32).collect()))
            .collect(),
    }
}

/// Per-pixel split-sum shading of a G-buffer. Misses show the environment.
pub fn splitsum_shade(gbuffer: &GBuffer, pre: &PrefilteredEnv, camera: &Camera) -> Result<Image<Rgb>> {
    let (w, h) = (gbuffer.width(), gbuffer.height());
    if (camera.width, camera.height) != (w, h) {
        return Err(Error::domain("camera resolution does not match the G-buffer"));
    }
    let rows: Vec<Vec<Rgb>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let ray = camera.generate_ray(DVec2::new(x as f64 + 0.5, y as f64 + 0.5));
                    if !*gbuffer.hit.get(x, y) {
                        return pre.levels[0].lookup(ray.dir);
                    }
                    let n = (camera.pose.rotation * *gbuffer.normal.get(x, y)).normalize();
                    let wo = -ray.dir;
                    // Back-facing normals from interpolation are bent toward the viewer.
                    let mu = n.dot(wo).max(1e-4);
                    shade_point(
                        pre,
                        n,
                        wo,
                        mu,
                        *gbuffer.base_color.get(x, y),
                        *gbuffer.roughness.get(x, y),
                        *gbuffer.metallic.get(x, y),
                    )
                })
                .collect()
        })
        .collect();
    Image::from_vec(w, h, rows.into_iter().flatten().collect())
}

/// Split-sum radiance leaving a point with normal `n` toward `wo`.
pub fn shade_point(pre: &PrefilteredEnv, n: DVec3, wo: DVec3, mu: f64, base_color: Rgb, roughness: f64, metallic: f64) -> Rgb {
    let f0 = Rgb::splat(DIELECTRIC_F0).lerp(base_color, metallic);
    let (a, b) = pre.table.lookup(mu, roughness);
    let r = reflect(wo, n);
    let specular = pre.specular(r, roughness) * (f0 * a + Rgb::splat(b));
    let e_d = DIELECTRIC_F0 * a + b;
    let diffuse = base_color * ((1.0 - metallic) * (1.0 - e_d).max(0.0));
    specular + diffuse * pre.irradiance(n)
}

/// Equirect texel containing `dir`, for tests and diagnostics.
pub fn texel_of(env: &EnvironmentMap, dir: DVec3) -> (usize, usize) {
    let uv = direction_to_equirect(dir);
    (
        ((uv.x * env.width() as f64) as usize).min(env.width() - 1),
        ((uv.y * env.height() as f64) as usize).min(env.height() - 1),
    )
}
