use std::f64::consts::PI;

use dr_forge::math::Frame;
use dr_forge::scene::SurfaceParams;
use dr_forge::Rgb;
use glam::DVec3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

mod common;
use common::oracles::{chi_square_p_value, quadrature_albedo, wo_at, CHI2_MATERIALS};

#[test]
fn albedo_never_exceeds_one() {
    let mut worst: f64 = 0.0;
    for r in [0.01, 0.1, 0.25, 0.5, 0.75, 1.0] {
        for m in [0.0, 0.5, 1.0] {
            for mu in [0.05, 0.2, 0.5, 0.8, 1.0] {
                let p = SurfaceParams::new(Rgb::WHITE, r, m);
                let albedo = quadrature_albedo(&p, mu).max_component();
                worst = worst.max(albedo);
                assert!(albedo <= 1.0 + 1e-3, "r={r} m={m} mu={mu}: {albedo}");
            }
        }
    }
    assert!(worst > 0.98, "white dielectric should be nearly lossless, got {worst}");
}

#[test]
fn white_dielectric_conserves_energy() {
    for r in [0.1, 0.5, 1.0] {
        for mu in [0.2, 0.6, 1.0] {
            let albedo = quadrature_albedo(&SurfaceParams::new(Rgb::WHITE, r, 0.0), mu).g;
            assert!((albedo - 1.0).abs() < 2e-3, "r={r} mu={mu}: {albedo}");
        }
    }
}

#[test]
fn rough_metal_at_normal_incidence_is_bounded() {
    let albedo = quadrature_albedo(&SurfaceParams::new(Rgb::WHITE, 0.2, 1.0), 1.0).g;
    assert!(albedo <= 1.0 && albedo > 0.9, "{albedo}");
}

#[test]
fn sampling_matches_pdf_chi_square() {
    for (k, &(a, r, m, mu)) in CHI2_MATERIALS.iter().enumerate() {
        let p = SurfaceParams::new(Rgb::splat(a), r, m);
        let pv = chi_square_p_value(&p, mu, 100 + k as u64);
        assert!(pv > 0.01, "material {k}: p = {pv}");
    }
}

#[test]
fn cosine_lobe_histogram_matches_cosine_pdf() {
    // Theta histogram of the diffuse sampler against the analytic cos(theta)/pi.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bins = 20usize;
    let samples = 100_000;
    let mut counts = vec![0.0; bins];
    for _ in 0..samples {
        let u = glam::DVec2::new(rand::Rng::gen(&mut rng), rand::Rng::gen(&mut rng));
        let d = dr_forge::math::cosine_hemisphere(u);
        let theta = d.z.clamp(-1.0, 1.0).acos();
        counts[((theta / (PI / 2.0) * bins as f64) as usize).min(bins - 1)] += 1.0;
    }
    let mut chi2 = 0.0;
    for (i, c) in counts.iter().enumerate() {
        let t0 = PI / 2.0 * i as f64 / bins as f64;
        let t1 = PI / 2.0 * (i + 1) as f64 / bins as f64;
        // Mass of cos/pi between t0 and t1 is sin^2 t1 - sin^2 t0.
        let e = (t1.sin().powi(2) - t0.sin().powi(2)) * samples as f64;
        chi2 += (c - e).powi(2) / e;
    }
    let pv = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    assert!(pv > 0.01, "p = {pv}");
}

#[test]
fn brdf_is_rotation_invariant_about_the_normal() {
    let p = SurfaceParams::new(Rgb::new(0.3, 0.6, 0.9), 0.4, 0.2);
    let n = DVec3::new(0.4, 0.1, 0.9).normalize();
    let f = Frame::from_normal(n);
    let wo = f.to_world(wo_at(0.6));
    let wi = f.to_world(DVec3::new(-0.5, 0.3, 0.81).normalize());
    let rot = glam::DQuat::from_axis_angle(n, 1.1);
    let a = dr_forge::pathtracer::brdf_eval(&p, n, wo, wi).unwrap();
    let b = dr_forge::pathtracer::brdf_eval(&p, n, rot * wo, rot * wi).unwrap();
    assert!((a - b).map(f64::abs).max_component() < 1e-9 * (1.0 + a.max_component()));
}
