//! Monte Carlo path tracer for environment-lit scenes.
//!
//! Direct lighting combines environment importance samples and BRDF samples
//! with the balance heuristic. Every pixel sample draws from its own
//! counter-based random stream, so output is bit-identical for a fixed seed
//! regardless of thread count.

pub mod brdf;
pub mod bvh;
pub mod camera;
pub mod env_sampler;
pub mod gbuffer;
pub mod geometry;
pub mod integrator;
pub mod rng;

use glam::DVec2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::radiometry::{EnvironmentMap, Rgb, Tonemap};
use crate::scene::ResolvedScene;

pub use brdf::{brdf_eval, brdf_pdf, energy_table, sample_brdf, BrdfSample, EnergyTable, ShadingBrdf};
pub use camera::{Camera, Ray};
pub use env_sampler::{build_env_sampler, EnvSample, EnvSampler};
pub use gbuffer::{normalize_clip, render_gbuffer_raw, DepthRange, GBuffer, RawGBuffer};
pub use geometry::{Instance, SceneGeometry, SurfaceHit};
pub use integrator::{Integrator, SamplingStrategy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSettings {
    pub spp: u32,
    /// Surface interactions per path.
    pub max_bounces: u32,
    pub seed: u64,
    pub tonemap: Tonemap,
    /// Per-sample ceiling on the largest color channel.
    pub firefly_clamp: f64,
    pub width: usize,
    pub height: usize,
    pub strategy: SamplingStrategy,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            spp: 16,
            max_bounces: 4,
            seed: 0,
            tonemap: Tonemap::Agx,
            firefly_clamp: 64.0,
            width: 128,
            height: 128,
            strategy: SamplingStrategy::Mis,
        }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Result<()> {
        if self.spp == 0 || self.max_bounces == 0 {
            return Err(Error::Validation("spp and max_bounces must be at least 1".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Validation("resolution must be non-zero".into()));
        }
        if !(self.firefly_clamp > 0.0) {
            return Err(Error::Validation("firefly clamp must be positive".into()));
        }
        Ok(())
    }
}

/// Where primary rays pass through each pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PixelFilter {
    /// Uniformly jittered over the pixel footprint.
    Box,
    /// Always through the pixel center.
    Center,
}

/// Renders one HDR frame of prepared geometry.
pub fn render_frame(
    geometry: &SceneGeometry,
    camera: &Camera,
    env: &EnvironmentMap,
    settings: &RenderSettings,
    frame: u32,
    filter: PixelFilter,
) -> Result<Image<Rgb>> {
    settings.validate()?;
    let sampler = EnvSampler::new(env);
    let integrator = Integrator {
        geometry,
        env,
        sampler: &sampler,
        max_bounces: settings.max_bounces,
        strategy: settings.strategy,
    };
    let (w, h) = (camera.width, camera.height);
    let rows: Vec<Vec<Rgb>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let mut acc = Rgb::BLACK;
                    for s in 0..settings.spp {
                        let mut rng = rng::sample_rng(settings.seed, frame, x as u32, y as u32, s);
                        let offset = match filter {
                            PixelFilter::Box => DVec2::new(rng.gen(), rng.gen()),
                            PixelFilter::Center => DVec2::splat(0.5),
                        };
                        let ray = camera.generate_ray(DVec2::new(x as f64, y as f64) + offset);
                        let mut l = integrator.radiance(ray, &mut rng);
                        if !l.is_finite() {
                            l = Rgb::BLACK;
                        }
                        let peak = l.max_component();
                        if peak > settings.firefly_clamp {
                            l = l * (settings.firefly_clamp / peak);
                        }
                        acc += l;
                    }
                    acc * (1.0 / settings.spp as f64)
                })
                .collect()
        })
        .collect();
    Image::from_vec(w, h, rows.into_iter().flatten().collect())
}

/// Camera for `frame` of a scene at the settings' resolution.
pub fn scene_camera(scene: &ResolvedScene, settings: &RenderSettings, frame: usize) -> Result<Camera> {
    let track = &scene.description.camera;
    Ok(Camera::new(track.pose_at(frame)?, track.vfov, settings.width, settings.height))
}

/// Path-traces every frame of a scene.
pub fn render(scene: &ResolvedScene, settings: &RenderSettings) -> Result<Vec<Image<Rgb>>> {
    (0..scene.frame_count())
        .map(|f| {
            let geometry = SceneGeometry::from_scene(scene, f)?;
            let env = scene.frame_env(f)?;
            let camera = scene_camera(scene, settings, f)?;
            render_frame(&geometry, &camera, &env, settings, f as u32, PixelFilter::Box)
        })
        .collect()
}

/// G-buffer of a single frame, depth normalized over that frame alone.
pub fn render_gbuffer(scene: &ResolvedScene, camera: &Camera, frame: usize) -> Result<GBuffer> {
    let geometry = SceneGeometry::from_scene(scene, frame)?;
    Ok(normalize_clip(vec![render_gbuffer_raw(&geometry, camera)]).remove(0))
}

/// Display-referred linear image (apply the sRGB curve for 8-bit output).
pub fn tonemap_image(hdr: &Image<Rgb>, tonemap: Tonemap) -> Image<Rgb> {
    hdr.map(|p| tonemap.apply(*p))
}
