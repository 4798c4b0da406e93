use std::f64::consts::{FRAC_1_PI, PI, TAU};

use glam::DVec3;

use crate::math::{direction_to_equirect, equirect_direction};
use crate::radiometry::EnvironmentMap;

const UNIFORM_PDF: f64 = 0.25 * FRAC_1_PI;

/// Piecewise-constant importance distribution over environment texels.
///
/// Texel probability is proportional to luminance times the texel's exact
/// solid angle; within a texel, directions are uniform in solid angle.
#[derive(Clone, Debug)]
pub struct EnvSampler {
    width: usize,
    height: usize,
    /// Row marginal CDF, `height + 1` entries.
    row_cdf: Vec<f64>,
    /// Per-row conditional CDFs, `height * (width + 1)` entries.
    col_cdf: Vec<f64>,
    /// Solid-angle density per texel.
    density: Vec<f64>,
    uniform: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvSample {
    pub dir: DVec3,
    pub pdf: f64,
}

fn sample_cdf(cdf: &[f64], u: f64) -> usize {
    // First bin whose upper edge exceeds u, skipping zero-width bins.
    let n = cdf.len() - 1;
    let idx = cdf.partition_point(|&c| c <= u);
    idx.clamp(1, n) - 1
}

impl EnvSampler {
    pub fn new(env: &EnvironmentMap) -> EnvSampler {
        let (w, h) = (env.width(), env.height());
        let mut weights = vec![0.0; w * h];
        for y in 0..h {
            let omega = env.texel_solid_angle(y);
            for x in 0..w {
                weights[y * w + x] = env.texel(x, y).luminance().max(0.0) * omega;
            }
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return EnvSampler {
                width: w,
                height: h,
                row_cdf: Vec::new(),
                col_cdf: Vec::new(),
                density: Vec::new(),
                uniform: true,
            };
        }
        let mut row_cdf = Vec::with_capacity(h + 1);
        let mut col_cdf = Vec::with_capacity(h * (w + 1));
        let mut density = vec![0.0; w * h];
        let mut acc = 0.0;
        row_cdf.push(0.0);
        for y in 0..h {
            let row = &weights[y * w..(y + 1) * w];
            let row_sum: f64 = row.iter().sum();
            let mut c = 0.0;
            col_cdf.push(0.0);
            for x in 0..w {
                c += row[x];
                col_cdf.push(if row_sum > 0.0 { c / row_sum } else { (x + 1) as f64 / w as f64 });
            }
            *col_cdf.last_mut().unwrap() = 1.0;
            acc += row_sum;
            row_cdf.push(acc / total);
            let omega = env.texel_solid_angle(y);
            for x in 0..w {
                density[y * w + x] = row[x] / total / omega;
            }
        }
        *row_cdf.last_mut().unwrap() = 1.0;
        EnvSampler {
            width: w,
            height: h,
            row_cdf,
            col_cdf,
            density,
            uniform: false,
        }
    }

    pub fn is_uniform_fallback(&self) -> bool {
        self.uniform
    }

    /// Draws a direction from four uniform numbers in `[0, 1)`.
    pub fn sample(&self, u: [f64; 4]) -> EnvSample {
        if self.uniform {
            let z = 1.0 - 2.0 * u[0];
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = TAU * u[1];
            return EnvSample {
                dir: DVec3::new(r * phi.cos(), r * phi.sin(), z),
                pdf: UNIFORM_PDF,
            };
        }
        let y = sample_cdf(&self.row_cdf, u[0]);
        let row = &self.col_cdf[y * (self.width + 1)..(y + 1) * (self.width + 1)];
        let x = sample_cdf(row, u[1]);
        let (w, h) = (self.width as f64, self.height as f64);
        let cos0 = (PI * y as f64 / h).cos();
        let cos1 = (PI * (y + 1) as f64 / h).cos();
        let cos_t = cos0 + (cos1 - cos0) * u[2];
        let theta = cos_t.clamp(-1.0, 1.0).acos();
        let uu = (x as f64 + u[3]) / w;
        let dir = equirect_direction(uu, theta / PI);
        EnvSample {
            dir,
            pdf: self.density[y * self.width + x],
        }
    }

    /// Solid-angle density of [`EnvSampler::sample`] at `dir`.
    pub fn pdf(&self, dir: DVec3) -> f64 {
        if self.uniform {
            return UNIFORM_PDF;
        }
        let uv = direction_to_equirect(dir);
        let x = ((uv.x * self.width as f64) as usize).min(self.width - 1);
        let y = ((uv.y * self.height as f64) as usize).min(self.height - 1);
        self.density[y * self.width + x]
    }

    /// Probability mass of texel `(x, y)`.
    pub fn texel_probability(&self, env: &EnvironmentMap, x: usize, y: usize) -> f64 {
        if self.uniform {
            env.texel_solid_angle(y) * UNIFORM_PDF
        } else {
            self.density[y * self.width + x] * env.texel_solid_angle(y)
        }
    }
}

/// Builds the importance distribution for an environment map.
pub fn build_env_sampler(env: &EnvironmentMap) -> EnvSampler {
    EnvSampler::new(env)
}
