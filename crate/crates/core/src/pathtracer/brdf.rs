//! GGX microfacet specular with height-correlated Smith shadowing and Schlick
//! Fresnel, plus an energy-compensated diffuse lobe.
//!
//! The diffuse lobe is weighted by `(1 - E(wo)) (1 - E(wi)) / (1 - E_avg)`,
//! where `E` is the dielectric specular albedo. It reduces to the plain
//! Lambert term when the specular lobe vanishes, stays reciprocal, and makes
//! a white dielectric reflect exactly the energy the specular lobe leaves
//! behind.

use std::f64::consts::{FRAC_1_PI, PI, TAU};
use std::sync::OnceLock;

use glam::{DVec2, DVec3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::{cosine_hemisphere, hammersley, is_unit, Frame, UNIT_TOLERANCE};
use crate::radiometry::Rgb;
use crate::scene::SurfaceParams;

pub const MIN_ROUGHNESS: f64 = 0.01;
pub const DIELECTRIC_F0: f64 = 0.04;

const TABLE_SIZE: usize = 128;
const TABLE_SAMPLES: u32 = 1024;

#[inline]
pub fn alpha_from_roughness(r: f64) -> f64 {
    let r = r.max(MIN_ROUGHNESS);
    r * r
}

/// GGX normal distribution for a half vector with cosine `cos_h` to the normal.
#[inline]
pub fn ggx_d(cos_h: f64, alpha: f64) -> f64 {
    if cos_h <= 0.0 {
        return 0.0;
    }
    let a2 = alpha * alpha;
    let c2 = cos_h * cos_h;
    let d = c2 * (a2 - 1.0) + 1.0;
    a2 / (PI * d * d)
}

#[inline]
pub fn smith_lambda(cos: f64, alpha: f64) -> f64 {
    let c2 = (cos * cos).max(1e-300);
    let tan2 = (1.0 - c2).max(0.0) / c2;
    0.5 * (-1.0 + (1.0 + alpha * alpha * tan2).sqrt())
}

#[inline]
pub fn smith_g1(cos: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + smith_lambda(cos, alpha))
}

/// Height-correlated masking-shadowing.
#[inline]
pub fn smith_g2(cos_o: f64, cos_i: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + smith_lambda(cos_o, alpha) + smith_lambda(cos_i, alpha))
}

#[inline]
pub fn schlick_weight(cos: f64) -> f64 {
    let m = (1.0 - cos).clamp(0.0, 1.0);
    let m2 = m * m;
    m2 * m2 * m
}

/// Samples a visible normal (local frame, normal = +Z) for view `wo`.
pub fn sample_vndf(wo: DVec3, alpha: f64, u: DVec2) -> DVec3 {
    let vh = DVec3::new(alpha * wo.x, alpha * wo.y, wo.z).normalize();
    let lensq = vh.x * vh.x + vh.y * vh.y;
    let t1 = if lensq > 0.0 {
        DVec3::new(-vh.y, vh.x, 0.0) / lensq.sqrt()
    } else {
        DVec3::X
    };
    let t2 = vh.cross(t1);
    let r = u.x.sqrt();
    let phi = TAU * u.y;
    let p1 = r * phi.cos();
    let mut p2 = r * phi.sin();
    let s = 0.5 * (1.0 + vh.z);
    p2 = (1.0 - s) * (1.0 - p1 * p1).max(0.0).sqrt() + s * p2;
    let nh = p1 * t1 + p2 * t2 + (1.0 - p1 * p1 - p2 * p2).max(0.0).sqrt() * vh;
    DVec3::new(alpha * nh.x, alpha * nh.y, nh.z.max(0.0)).normalize()
}

/// Pre-integrated specular albedo split into the `F0` scale `A` and bias `B`,
/// so that the albedo of the specular lobe is `F0 * A + B`. Indexed by
/// `(n.wo, roughness)` on a regular grid of nodes including both ends.
#[derive(Clone, Debug)]
pub struct EnergyTable {
    size: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    /// Cosine-weighted average of the dielectric albedo per roughness node.
    e_avg: Vec<f64>,
}

impl EnergyTable {
    pub fn compute(size: usize, samples: u32) -> EnergyTable {
        assert!(size >= 2 && samples >= 1);
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..size)
            .into_par_iter()
            .map(|j| {
                let alpha = alpha_from_roughness(j as f64 / (size - 1) as f64);
                (0..size)
                    .map(|i| {
                        let mu = (i as f64 / (size - 1) as f64).max(1e-4);
                        integrate_ab(mu, alpha, samples)
                    })
                    .unzip()
            })
            .collect();
        let mut a = Vec::with_capacity(size * size);
        let mut b = Vec::with_capacity(size * size);
        for (ra, rb) in rows {
            a.extend(ra);
            b.extend(rb);
        }
        let mut table = EnergyTable {
            size,
            a,
            b,
            e_avg: vec![0.0; size],
        };
        // Exact integral of the piecewise-linear interpolant, so the
        // compensated diffuse lobe integrates consistently with lookups.
        let h = 1.0 / (size - 1) as f64;
        for j in 0..size {
            let mut acc = 0.0;
            for k in 0..size - 1 {
                let mu = k as f64 * h;
                let e0 = table.e_dielectric_node(k, j);
                let e1 = table.e_dielectric_node(k + 1, j);
                acc += 2.0 * h * (e0 * (mu / 2.0 + h / 6.0) + e1 * (mu / 2.0 + h / 3.0));
            }
            table.e_avg[j] = acc;
        }
        table
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Raw node values `(A, B)` at `(mu index, roughness index)`.
    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        let k = j * self.size + i;
        (self.a[k], self.b[k])
    }

    fn e_dielectric_node(&self, i: usize, j: usize) -> f64 {
        let (a, b) = self.node(i, j);
        DIELECTRIC_F0 * a + b
    }

    fn coords(&self, x: f64) -> (usize, usize, f64) {
        let f = x.clamp(0.0, 1.0) * (self.size - 1) as f64;
        let i0 = (f.floor() as usize).min(self.size - 2);
        (i0, i0 + 1, f - i0 as f64)
    }

    /// Bilinear lookup of `(A, B)`.
    pub fn lookup(&self, mu: f64, roughness: f64) -> (f64, f64) {
        let (i0, i1, tx) = self.coords(mu);
        let (j0, j1, ty) = self.coords(roughness);
        let lerp2 = |v: &[f64]| {
            let at = |i: usize, j: usize| v[j * self.size + i];
            let top = at(i0, j0) * (1.0 - tx) + at(i1, j0) * tx;
            let bot = at(i0, j1) * (1.0 - tx) + at(i1, j1) * tx;
            top * (1.0 - ty) + bot * ty
        };
        (lerp2(&self.a), lerp2(&self.b))
    }

    /// Specular albedo for `F0 = 0.04`.
    pub fn e_dielectric(&self, mu: f64, roughness: f64) -> f64 {
        let (a, b) = self.lookup(mu, roughness);
        DIELECTRIC_F0 * a + b
    }

    /// `2 * integral of e_dielectric(mu) mu dmu` for this roughness.
    pub fn e_avg_dielectric(&self, roughness: f64) -> f64 {
        let (j0, j1, t) = self.coords(roughness);
        self.e_avg[j0] * (1.0 - t) + self.e_avg[j1] * t
    }
}

/// Estimates `(A, B)` for one view cosine by VNDF sampling with Hammersley points.
fn integrate_ab(mu: f64, alpha: f64, samples: u32) -> (f64, f64) {
    let wo = DVec3::new((1.0 - mu * mu).max(0.0).sqrt(), 0.0, mu);
    let g1o = smith_g1(mu, alpha);
    let (mut a, mut b) = (0.0, 0.0);
    for s in 0..samples {
        let h = sample_vndf(wo, alpha, hammersley(s, samples));
        let wi = 2.0 * wo.dot(h) * h - wo;
        if wi.z <= 0.0 {
            continue;
        }
        let w = smith_g2(mu, wi.z, alpha) / g1o;
        let fc = schlick_weight(wo.dot(h));
        a += (1.0 - fc) * w;
        b += fc * w;
    }
    (a / samples as f64, b / samples as f64)
}

/// Shared table used by the BRDF.
pub fn energy_table() -> &'static EnergyTable {
    static TABLE: OnceLock<EnergyTable> = OnceLock::new();
    TABLE.get_or_init(|| EnergyTable::compute(TABLE_SIZE, TABLE_SAMPLES))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrdfSample {
    pub wi: DVec3,
    /// Solid-angle density of the lobe mixture.
    pub pdf: f64,
    /// `f_r * |n . wi|`.
    pub value: Rgb,
}

/// The BRDF specialized to one shading point and outgoing direction.
#[derive(Clone, Copy, Debug)]
pub struct ShadingBrdf {
    frame: Frame,
    wo: DVec3,
    alpha: f64,
    f0: Rgb,
    diffuse: Rgb,
    one_minus_e_o: f64,
    inv_one_minus_e_avg: f64,
    roughness: f64,
    p_specular: f64,
}

impl ShadingBrdf {
    /// `None` when `wo` is not above the surface.
    pub fn new(p: &SurfaceParams, n: DVec3, wo_world: DVec3) -> Option<ShadingBrdf> {
        let frame = Frame::from_normal(n);
        let wo = frame.to_local(wo_world);
        if wo.z <= 1e-9 {
            return None;
        }
        let table = energy_table();
        let roughness = p.roughness.max(MIN_ROUGHNESS);
        let f0 = Rgb::splat(DIELECTRIC_F0).lerp(p.base_color, p.metallic);
        let diffuse = p.base_color * (1.0 - p.metallic);
        let one_minus_e_o = (1.0 - table.e_dielectric(wo.z, roughness)).max(0.0);
        let e_avg = table.e_avg_dielectric(roughness);
        let (a, b) = table.lookup(wo.z, roughness);
        let w_spec = (f0 * a + Rgb::splat(b)).luminance().max(0.0);
        let w_diff = diffuse.luminance() * one_minus_e_o;
        let p_specular = if w_spec + w_diff > 0.0 { w_spec / (w_spec + w_diff) } else { 1.0 };
        Some(ShadingBrdf {
            frame,
            wo,
            alpha: alpha_from_roughness(roughness),
            f0,
            diffuse,
            one_minus_e_o,
            inv_one_minus_e_avg: 1.0 / (1.0 - e_avg).max(1e-6),
            roughness,
            p_specular,
        })
    }

    pub fn specular_probability(&self) -> f64 {
        self.p_specular
    }

    fn eval_local(&self, wi: DVec3) -> Rgb {
        let (mu_o, mu_i) = (self.wo.z, wi.z);
        if mu_i <= 0.0 {
            return Rgb::BLACK;
        }
        let h = (self.wo + wi).normalize();
        let fc = schlick_weight(self.wo.dot(h));
        let fresnel = self.f0 + (Rgb::WHITE - self.f0) * fc;
        let spec = ggx_d(h.z, self.alpha) * smith_g2(mu_o, mu_i, self.alpha) / (4.0 * mu_o * mu_i);
        let one_minus_e_i = (1.0 - energy_table().e_dielectric(mu_i, self.roughness)).max(0.0);
        let diff = self.one_minus_e_o * one_minus_e_i * self.inv_one_minus_e_avg * FRAC_1_PI;
        fresnel * spec + self.diffuse * diff
    }

    /// Diffuse and specular parts of `f_r`, local frame.
    pub fn eval_parts(&self, wi_world: DVec3) -> (Rgb, Rgb) {
        let wi = self.frame.to_local(wi_world);
        if wi.z <= 0.0 {
            return (Rgb::BLACK, Rgb::BLACK);
        }
        let total = self.eval_local(wi);
        let one_minus_e_i = (1.0 - energy_table().e_dielectric(wi.z, self.roughness)).max(0.0);
        let diff = self.diffuse * (self.one_minus_e_o * one_minus_e_i * self.inv_one_minus_e_avg * FRAC_1_PI);
        (diff, total - diff)
    }

    pub fn eval(&self, wi_world: DVec3) -> Rgb {
        self.eval_local(self.frame.to_local(wi_world))
    }

    fn pdf_local(&self, wi: DVec3) -> f64 {
        if wi.z <= 0.0 {
            return 0.0;
        }
        let h = (self.wo + wi).normalize();
        let spec = smith_g1(self.wo.z, self.alpha) * ggx_d(h.z, self.alpha) / (4.0 * self.wo.z);
        self.p_specular * spec + (1.0 - self.p_specular) * wi.z * FRAC_1_PI
    }

    pub fn pdf(&self, wi_world: DVec3) -> f64 {
        self.pdf_local(self.frame.to_local(wi_world))
    }

    /// Draws a direction from the lobe mixture using three uniform numbers.
    pub fn sample(&self, u_lobe: f64, u: DVec2) -> Option<BrdfSample> {
        let wi = if u_lobe < self.p_specular {
            let h = sample_vndf(self.wo, self.alpha, u);
            2.0 * self.wo.dot(h) * h - self.wo
        } else {
            cosine_hemisphere(u)
        };
        if wi.z <= 1e-12 {
            return None;
        }
        let wi = wi.normalize();
        let pdf = self.pdf_local(wi);
        if !(pdf > 0.0 && pdf.is_finite()) {
            return None;
        }
        let value = self.eval_local(wi) * wi.z;
        Some(BrdfSample {
            wi: self.frame.to_world(wi),
            pdf,
            value,
        })
    }
}

fn check_unit(v: DVec3, what: &str) -> Result<()> {
    if is_unit(v, UNIT_TOLERANCE) {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} is not a unit vector: {v:?}")))
    }
}

/// `f_r(n, wo, wi)`; zero when either direction is below the surface.
pub fn brdf_eval(p: &SurfaceParams, n: DVec3, wo: DVec3, wi: DVec3) -> Result<Rgb> {
    check_unit(n, "normal")?;
    check_unit(wo, "wo")?;
    check_unit(wi, "wi")?;
    Ok(ShadingBrdf::new(p, n, wo).map(|b| b.eval(wi)).unwrap_or(Rgb::BLACK))
}

/// Samples the lobe mixture; `None` for grazing or degenerate configurations.
pub fn sample_brdf(p: &SurfaceParams, n: DVec3, wo: DVec3, rng: &mut impl rand::Rng) -> Option<BrdfSample> {
    let b = ShadingBrdf::new(p, n, wo)?;
    b.sample(rng.gen(), DVec2::new(rng.gen(), rng.gen()))
}

/// Density of [`sample_brdf`] for direction `wi`.
pub fn brdf_pdf(p: &SurfaceParams, n: DVec3, wo: DVec3, wi: DVec3) -> f64 {
    ShadingBrdf::new(p, n, wo).map(|b| b.pdf(wi)).unwrap_or(0.0)
}
