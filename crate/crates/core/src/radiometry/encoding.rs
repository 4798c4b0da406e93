//! The three panoramic lighting images fed to a renderer as conditions:
//! an LDR tonemapped view, a normalized log-radiance view and a per-pixel
//! direction map expressed in camera coordinates.

use glam::{DMat3, DVec3};

use super::{reinhard_tonemap, EnvironmentMap, Rgb};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::math::equirect_direction;

/// Floor for the log normalizer so all-black probes do not divide by zero.
pub const LOG_ENCODE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct LightingEncoding {
    pub e_ldr: Image<Rgb>,
    pub e_log: Image<Rgb>,
    pub e_dir: Image<DVec3>,
    /// Max of `ln(1 + x)` over all texels and channels, needed to invert `e_log`.
    pub e_max: f64,
}

/// `ln(1 + x) / e_max` per channel, with `e_max` the largest `ln(1 + x)` in
/// the map (floored at [`LOG_ENCODE_FLOOR`]).
pub fn log_encode(env: &EnvironmentMap) -> (Image<Rgb>, f64) {
    let logs: Vec<Rgb> = (0..env.height())
        .flat_map(|y| (0..env.width()).map(move |x| (x, y)))
        .map(|(x, y)| env.texel(x, y).map(f64::ln_1p))
        .collect();
    let e_max = logs
        .iter()
        .map(|p| p.max_component())
        .fold(LOG_ENCODE_FLOOR, f64::max);
    let pixels = logs.into_iter().map(|p| p / e_max).collect();
    let image = Image::from_vec(env.width(), env.height(), pixels).expect("dims match");
    (image, e_max)
}

/// Unit direction of every texel center, rotated into camera coordinates by
/// `world_to_camera`.
pub fn direction_encoding(width: usize, height: usize, world_to_camera: DMat3) -> Result<Image<DVec3>> {
    if height == 0 || width != 2 * height {
        return Err(Error::domain(format!(
            "direction encoding needs a 2:1 panorama, got {width}x{height}"
        )));
    }
    Ok(Image::from_fn(width, height, |x, y| {
        let u = (x as f64 + 0.5) / width as f64;
        let v = (y as f64 + 0.5) / height as f64;
        (world_to_camera * equirect_direction(u, v)).normalize()
    }))
}

pub fn encode_lighting(env: &EnvironmentMap, world_to_camera: DMat3) -> Result<LightingEncoding> {
    let mut ldr = Vec::with_capacity(env.width() * env.height());
    for y in 0..env.height() {
        for x in 0..env.width() {
            ldr.push(reinhard_tonemap(env.texel(x, y))?);
        }
    }
    let e_ldr = Image::from_vec(env.width(), env.height(), ldr)?;
    let (e_log, e_max) = log_encode(env);
    let e_dir = direction_encoding(env.width(), env.height(), world_to_camera)?;
    Ok(LightingEncoding {
        e_ldr,
        e_log,
        e_dir,
        e_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use glam::DQuat;
    use std::f64::consts::E;

    #[test]
    fn black_map_uses_floor() {
        let env = EnvironmentMap::uniform(4, Rgb::BLACK).unwrap();
        let (img, e_max) = log_encode(&env);
        assert_eq!(e_max, LOG_ENCODE_FLOOR);
        assert!(img.pixels().iter().all(|p| p.is_black()));
    }

    #[test]
    fn e_minus_one_peak_encodes_to_one() {
        let env = EnvironmentMap::from_fn(4, |x, y| {
            if (x, y) == (3, 1) {
                Rgb::new(0.1, E - 1.0, 0.5)
            } else {
                Rgb::splat(0.2)
            }
        })
        .unwrap();
        let (img, e_max) = log_encode(&env);
        assert!((e_max - 1.0).abs() < 1e-15);
        assert_eq!(img.get(3, 1).g, 1.0);
        let max = img.pixels().iter().map(|p| p.max_component()).fold(0.0, f64::max);
        assert_eq!(max, 1.0);
    }

    #[test]
    fn uniform_map_encodes_to_one() {
        let env = EnvironmentMap::uniform(4, Rgb::splat(3.7)).unwrap();
        let (img, _) = log_encode(&env);
        assert!(img.pixels().iter().all(|p| *p == Rgb::splat(1.0)));
    }

    #[test]
    fn direction_encoding_conventions() {
        let img = direction_encoding(64, 32, DMat3::IDENTITY).unwrap();
        // Texel centers straddle (0.5, 0.5); average the four around it.
        let c = (*img.get(31, 15) + *img.get(32, 15) + *img.get(31, 16) + *img.get(32, 16)).normalize();
        assert!((c - DVec3::NEG_Z).length() < 1e-12);
        let top = *img.get(10, 0);
        assert!(top.y > (std::f64::consts::PI / 32.0).cos() - 1e-12);
        assert!(direction_encoding(10, 10, DMat3::IDENTITY).is_err());
    }

    #[test]
    fn directions_are_unit_under_rotation() {
        let rot = DMat3::from_quat(DQuat::from_euler(glam::EulerRot::YXZ, 0.7, -0.3, 1.1));
        let img = direction_encoding(32, 16, rot).unwrap();
        for d in img.pixels() {
            assert!((d.length() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn encode_lighting_ranges() {
        let env = EnvironmentMap::from_fn(8, |x, y| Rgb::new(x as f64 * 3.0, y as f64, 0.1)).unwrap();
        let enc = encode_lighting(&env, DMat3::IDENTITY).unwrap();
        assert!(enc.e_max > 0.0);
        for p in enc.e_ldr.pixels().iter().chain(enc.e_log.pixels()) {
            assert!(p.min_component() >= 0.0 && p.max_component() <= 1.0);
        }
    }
}
