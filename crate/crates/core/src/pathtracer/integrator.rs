use glam::DVec2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::brdf::ShadingBrdf;
use super::camera::Ray;
use super::env_sampler::EnvSampler;
use super::geometry::{spawn_ray, SceneGeometry};
use crate::radiometry::{EnvironmentMap, Rgb};

/// Which estimators contribute direct lighting from the environment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    /// Environment and BRDF samples combined with the balance heuristic.
    #[default]
    Mis,
    /// Environment light found only by BRDF-sampled paths.
    BrdfOnly,
    /// Direct light only through environment samples. Biased where the
    /// sampler assigns zero density to directions with non-zero radiance.
    LightOnly,
}

const RR_START: u32 = 3;

pub struct Integrator<'a> {
    pub geometry: &'a SceneGeometry,
    pub env: &'a EnvironmentMap,
    pub sampler: &'a EnvSampler,
    pub max_bounces: u32,
    pub strategy: SamplingStrategy,
}

impl Integrator<'_> {
    /// One-sample estimate of the radiance arriving along `ray`.
    pub fn radiance(&self, mut ray: Ray, rng: &mut impl Rng) -> Rgb {
        let mut l = Rgb::BLACK;
        let mut beta = Rgb::WHITE;
        let mut prev_brdf_pdf = 0.0;
        let mut depth = 0u32;
        loop {
            let Some(hit) = self.geometry.intersect(&ray, f64::INFINITY) else {
                let le = self.env.lookup(ray.dir);
                let w = if depth == 0 {
                    1.0
                } else {
                    match self.strategy {
                        SamplingStrategy::BrdfOnly => 1.0,
                        SamplingStrategy::LightOnly => 0.0,
                        SamplingStrategy::Mis => {
                            let pl = self.sampler.pdf(ray.dir);
                            prev_brdf_pdf / (prev_brdf_pdf + pl)
                        }
                    }
                };
                l += beta * le * w;
                break;
            };
            if depth >= self.max_bounces {
                break;
            }
            let wo = -ray.dir;
            let ng = hit.geometric_normal;
            let ns = if hit.shading_normal.dot(wo) > 0.0 { hit.shading_normal } else { ng };
            let Some(brdf) = ShadingBrdf::new(&hit.params, ns, wo) else {
                break;
            };

            if self.strategy != SamplingStrategy::BrdfOnly {
                let s = self.sampler.sample([rng.gen(), rng.gen(), rng.gen(), rng.gen()]);
                let cos = s.dir.dot(ns);
                if s.pdf > 0.0 && cos > 0.0 && s.dir.dot(ng) > 0.0 {
                    let f = brdf.eval(s.dir);
                    if !f.is_black() && !self.geometry.occluded(&spawn_ray(hit.position, ng, s.dir), f64::INFINITY) {
                        let w = match self.strategy {
                            SamplingStrategy::Mis => {
                                let pb = brdf.pdf(s.dir);
                                s.pdf / (s.pdf + pb)
                            }
                            _ => 1.0,
                        };
                        l += beta * f * self.env.lookup(s.dir) * (cos * w / s.pdf);
                    }
                }
            } else {
                // Keep the random stream layout identical across strategies.
                let _: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
            }

            let Some(bs) = brdf.sample(rng.gen(), DVec2::new(rng.gen(), rng.gen())) else {
                break;
            };
            if bs.wi.dot(ng) <= 0.0 {
                break;
            }
            beta *= bs.value * (1.0 / bs.pdf);
            prev_brdf_pdf = bs.pdf;
            depth += 1;
            if depth >= RR_START {
                let q = beta.max_component().min(0.95);
                if rng.gen::<f64>() >= q {
                    break;
                }
                beta = beta * (1.0 / q);
            }
            ray = spawn_ray(hit.position, ng, bs.wi);
        }
        l
    }
}
