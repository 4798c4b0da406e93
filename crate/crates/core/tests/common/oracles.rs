use std::f64::consts::TAU;

use dr_forge::pathtracer::brdf::{alpha_from_roughness, ggx_d, ShadingBrdf};
use dr_forge::pathtracer::{brdf_pdf, sample_brdf};
use dr_forge::scene::SurfaceParams;
use dr_forge::Rgb;
use glam::DVec3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn wo_at(mu: f64) -> DVec3 {
    DVec3::new((1.0 - mu * mu).sqrt(), 0.0, mu)
}

/// Directional albedo by deterministic 2D quadrature: the diffuse part on a
/// cosine-warped grid over `wi`, the specular part on a GGX-warped grid over
/// the half vector.
pub fn quadrature_albedo(p: &SurfaceParams, mu: f64) -> Rgb {
    let n = DVec3::Z;
    let wo = wo_at(mu);
    let brdf = ShadingBrdf::new(p, n, wo).unwrap();
    let (ns, nphi) = (1024usize, 256usize);
    let mut diffuse = Rgb::BLACK;
    for i in 0..ns {
        let s = (i as f64 + 0.5) / ns as f64;
        let (r, z) = (s.sqrt(), (1.0 - s).sqrt());
        for j in 0..nphi {
            let phi = TAU * (j as f64 + 0.5) / nphi as f64;
            let wi = DVec3::new(r * phi.cos(), r * phi.sin(), z);
            // f cos dw = f / 2 ds dphi on this grid.
            diffuse += brdf.eval_parts(wi).0 * 0.5;
        }
    }
    diffuse = diffuse * (TAU / (ns * nphi) as f64);

    let alpha = alpha_from_roughness(p.roughness);
    let a2 = alpha * alpha;
    let (ns, nphi) = (4096usize, 256usize);
    let mut specular = Rgb::BLACK;
    for i in 0..ns {
        let s = (i as f64 + 0.5) / ns as f64;
        let cos_h = ((1.0 - s) / (1.0 + (a2 - 1.0) * s)).sqrt();
        let sin_h = (1.0 - cos_h * cos_h).max(0.0).sqrt();
        // D(h) cos_h dw_h = ds dphi / (2 pi).
        let dw_h = 1.0 / (TAU * ggx_d(cos_h, alpha) * cos_h);
        for j in 0..nphi {
            let phi = TAU * (j as f64 + 0.5) / nphi as f64;
            let h = DVec3::new(sin_h * phi.cos(), sin_h * phi.sin(), cos_h);
            let o_h = wo.dot(h);
            if o_h <= 0.0 {
                continue;
            }
            let wi = 2.0 * o_h * h - wo;
            if wi.z <= 0.0 {
                continue;
            }
            let jac = 4.0 * o_h;
            specular += brdf.eval_parts(wi).1 * (wi.z * jac * dw_h);
        }
    }
    specular = specular * (TAU / (ns * nphi) as f64);
    diffuse + specular
}

/// Chi-square test of sampled directions against the analytic density.
/// Bins are equal-area cells in `(cos theta, phi)`; samples rejected by the
/// sampler go to an extra bin whose expected mass is the missing density.
pub fn chi_square_p_value(p: &SurfaceParams, mu: f64, seed: u64) -> f64 {
    let n = DVec3::Z;
    let wo = wo_at(mu);
    let (nz, nphi) = (16usize, 32usize);
    let samples = 200_000usize;
    let mut observed = vec![0.0; nz * nphi + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        match sample_brdf(p, n, wo, &mut rng) {
            Some(s) => {
                let z = s.wi.z.clamp(0.0, 1.0 - 1e-12);
                let phi = s.wi.y.atan2(s.wi.x).rem_euclid(TAU);
                let iz = (z * nz as f64) as usize;
                let ip = ((phi / TAU * nphi as f64) as usize).min(nphi - 1);
                observed[iz * nphi + ip] += 1.0;
            }
            None => observed[nz * nphi] += 1.0,
        }
    }
    let sub = 64usize;
    let mut expected = vec![0.0; nz * nphi + 1];
    let mut total = 0.0;
    for iz in 0..nz {
        for ip in 0..nphi {
            let mut acc = 0.0;
            for a in 0..sub {
                for b in 0..sub {
                    let z = (iz as f64 + (a as f64 + 0.5) / sub as f64) / nz as f64;
                    let phi = TAU * (ip as f64 + (b as f64 + 0.5) / sub as f64) / nphi as f64;
                    let r = (1.0 - z * z).sqrt();
                    acc += brdf_pdf(p, n, wo, DVec3::new(r * phi.cos(), r * phi.sin(), z));
                }
            }
            let area = (1.0 / nz as f64) * (TAU / nphi as f64);
            let mass = acc / (sub * sub) as f64 * area;
            expected[iz * nphi + ip] = mass * samples as f64;
            total += mass;
        }
    }
    expected[nz * nphi] = (1.0 - total).max(0.0) * samples as f64;

    // Pool sparse cells so every tested cell expects at least 5 samples.
    let mut order: Vec<usize> = (0..expected.len()).collect();
    order.sort_by(|&a, &b| expected[a].partial_cmp(&expected[b]).unwrap());
    let (mut chi2, mut dof) = (0.0, 0usize);
    let (mut pool_e, mut pool_o) = (0.0, 0.0);
    for i in order {
        if expected[i] < 5.0 {
            pool_e += expected[i];
            pool_o += observed[i];
            continue;
        }
        chi2 += (observed[i] - expected[i]).powi(2) / expected[i];
        dof += 1;
    }
    if pool_e > 0.0 {
        if pool_e >= 5.0 {
            chi2 += (pool_o - pool_e).powi(2) / pool_e;
            dof += 1;
        } else {
            assert!(pool_o < 5.0 + 5.0 * pool_e.sqrt() + 10.0, "samples in zero-density region");
        }
    }
    1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(chi2)
}

pub const CHI2_MATERIALS: [(f64, f64, f64, f64); 6] = [
    // (base color, roughness, metallic, cos theta_o)
    (0.8, 1.0, 0.0, 0.7),
    (0.5, 0.5, 0.0, 0.3),
    (0.9, 0.3, 1.0, 0.9),
    (0.2, 0.2, 0.5, 0.5),
    (1.0, 0.7, 0.3, 0.15),
    (0.6, 0.25, 0.0, 1.0),
];
