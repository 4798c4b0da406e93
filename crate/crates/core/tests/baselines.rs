mod common;

use common::{constant, front_camera, sphere, wall};
use dr_forge::baselines::{extract_depth_mesh, prefilter_env, shade_point, splitsum_shade, ssrt_render, DEFAULT_EDGE_RATIO};
use dr_forge::math::reflect;
use dr_forge::pathtracer::brdf::energy_table;
use dr_forge::pathtracer::{normalize_clip, render_gbuffer_raw, Camera, GBuffer, Instance, RenderSettings, SceneGeometry};
use dr_forge::{EnvironmentMap, Rgb};
use glam::{DQuat, DVec2, DVec3};

fn gbuffer(instances: Vec<Instance>, camera: &Camera) -> GBuffer {
    let geometry = SceneGeometry::new(instances);
    normalize_clip(vec![render_gbuffer_raw(&geometry, camera)]).remove(0)
}

fn hit_mean(img: &dr_forge::Image<Rgb>, g: &GBuffer) -> Rgb {
    let px: Vec<Rgb> = img.pixels().iter().zip(g.hit.pixels()).filter(|(_, h)| **h).map(|(p, _)| *p).collect();
    px.iter().fold(Rgb::BLACK, |a, b| a + *b) * (1.0 / px.len() as f64)
}

#[test]
fn plane_filling_the_view_gives_a_watertight_grid() {
    let camera = front_camera(2.0, 0.5, 12);
    let g = gbuffer(vec![wall(10.0, 0.0, constant(0.5, 0.5, 0.0))], &camera);
    let m = extract_depth_mesh(&g, &camera, DEFAULT_EDGE_RATIO).unwrap();
    assert_eq!(m.mesh.positions.len(), 144);
    assert_eq!(m.triangle_count(), 2 * 11 * 11);
    assert_eq!(m.dropped, 0);
}

#[test]
fn depth_discontinuities_are_not_bridged() {
    let camera = front_camera(1.0, 0.8, 24);
    let near = wall(0.3, 0.0, constant(0.5, 0.5, 0.0));
    // Three times farther than the near plane.
    let far = wall(20.0, -2.0, constant(0.5, 0.5, 0.0));
    let g = gbuffer(vec![near, far], &camera);
    let m = extract_depth_mesh(&g, &camera, DEFAULT_EDGE_RATIO).unwrap();
    assert!(m.dropped > 0);
    for tri in &m.mesh.indices {
        let zs = tri.map(|i| -m.mesh.positions[i as usize].z);
        let lo = zs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = zs.iter().copied().fold(0.0, f64::max);
        assert!(hi / lo < 1.5, "triangle bridges {lo} and {hi}");
    }
}

#[test]
fn vertices_project_back_to_their_pixels() {
    let camera = Camera::new(
        dr_forge::scene::CameraPose::look_at(DVec3::new(0.7, 1.1, 3.2), DVec3::new(0.0, -0.1, 0.0)),
        0.9,
        32,
        24,
    );
    let g = gbuffer(vec![sphere(constant(0.5, 0.5, 0.0)), wall(12.0, -1.5, constant(0.3, 0.2, 0.0))], &camera);
    let m = extract_depth_mesh(&g, &camera, DEFAULT_EDGE_RATIO).unwrap();
    assert!(!m.pixels.is_empty());
    for (p, &(x, y)) in m.mesh.positions.iter().zip(&m.pixels) {
        let px = camera.project(*p).unwrap();
        assert!((px - DVec2::new(x as f64 + 0.5, y as f64 + 0.5)).length() < 1e-3);
    }
}

#[test]
fn triangle_count_grows_with_threshold() {
    let camera = front_camera(3.0, 0.9, 24);
    let g = gbuffer(vec![sphere(constant(0.5, 0.5, 0.0)), wall(12.0, -2.0, constant(0.3, 0.2, 0.0))], &camera);
    let mut last = 0;
    for t in [1.0, 1.01, 1.05, 1.2, 1.5, 2.0, 4.0] {
        let n = extract_depth_mesh(&g, &camera, t).unwrap().triangle_count();
        assert!(n >= last, "threshold {t}: {n} < {last}");
        last = n;
    }
    assert!(extract_depth_mesh(&g, &camera, 0.9).is_err());
}

#[test]
fn ssrt_diffuse_plane_matches_albedo_times_radiance() {
    let c = Rgb::new(0.6, 0.9, 1.2);
    let env = EnvironmentMap::uniform(16, c).unwrap();
    let camera = front_camera(2.0, 0.4, 12);
    for a in [1.0, 0.8] {
        let g = gbuffer(vec![wall(10.0, 0.0, constant(a, 1.0, 0.0))], &camera);
        let settings = RenderSettings { spp: 512, width: 12, height: 12, seed: 5, ..RenderSettings::default() };
        let img = ssrt_render(&g, &camera, &env, &settings, DEFAULT_EDGE_RATIO, 0).unwrap();
        let mean = hit_mean(&img, &g);
        for k in 0..3 {
            let expect = a * c.channel(k);
            assert!((mean.channel(k) / expect - 1.0).abs() < 0.02, "a={a} channel {k}: {} vs {expect}", mean.channel(k));
        }
    }
}

#[test]
fn ssrt_under_black_environment_is_black() {
    let env = EnvironmentMap::uniform(8, Rgb::BLACK).unwrap();
    let camera = front_camera(3.0, 0.8, 10);
    let g = gbuffer(vec![sphere(constant(0.9, 0.3, 0.5))], &camera);
    let settings = RenderSettings { spp: 4, width: 10, height: 10, ..RenderSettings::default() };
    let img = ssrt_render(&g, &camera, &env, &settings, DEFAULT_EDGE_RATIO, 0).unwrap();
    assert!(img.pixels().iter().all(|p| *p == Rgb::BLACK));
}

fn smooth_env(height: usize) -> EnvironmentMap {
    let probe = EnvironmentMap::uniform(height, Rgb::BLACK).unwrap();
    EnvironmentMap::from_fn(height, |x, y| {
        let d = probe.pixel_center_direction(x, y);
        Rgb::new(1.0 + 0.5 * d.x, 1.0 + 0.3 * d.y, 1.0 - 0.4 * d.z)
    })
    .unwrap()
}

#[test]
fn level_zero_is_the_source() {
    let env = smooth_env(32);
    let pre = prefilter_env(&env, 4).unwrap();
    assert_eq!(pre.levels[0].raw_pixels(), env.raw_pixels());
}

#[test]
fn uniform_environment_stays_uniform_at_every_level() {
    let c = Rgb::new(0.2, 0.5, 3.0);
    let pre = prefilter_env(&EnvironmentMap::uniform(32, c).unwrap(), 5).unwrap();
    for level in pre.levels.iter().chain(std::iter::once(&pre.irradiance)) {
        for p in level.raw_pixels() {
            assert!((*p - c).map(f64::abs).max_component() < 1e-9 * 3.0, "{p:?}");
        }
    }
}

#[test]
fn prefiltering_preserves_radiant_power() {
    let env = EnvironmentMap::from_fn(64, |x, y| if (x, y) == (40, 27) { Rgb::splat(500.0) } else { Rgb::BLACK }).unwrap();
    let source = env.integral().g;
    let pre = prefilter_env(&env, 6).unwrap();
    for (l, level) in pre.levels.iter().enumerate() {
        let e = level.integral().g;
        assert!((e / source - 1.0).abs() < 0.02, "level {l}: {e} vs {source}");
    }
    let e = pre.irradiance.integral().g;
    assert!((e / source - 1.0).abs() < 0.02, "irradiance: {e} vs {source}");
}

#[test]
fn near_mirror_metal_reflects_the_environment() {
    let env = smooth_env(64);
    let pre = prefilter_env(&env, 6).unwrap();
    let n = DVec3::new(0.2, 0.9, 0.1).normalize();
    for wo in [DVec3::new(0.1, 1.0, 0.3), DVec3::new(-0.5, 0.6, 0.2), DVec3::new(0.3, 0.4, -0.8)] {
        let wo = wo.normalize();
        let got = shade_point(&pre, n, wo, n.dot(wo), Rgb::WHITE, 0.01, 1.0);
        let expect = env.lookup(reflect(wo, n));
        for k in 0..3 {
            assert!((got.channel(k) / expect.channel(k) - 1.0).abs() < 0.01, "{got:?} vs {expect:?}");
        }
    }
}

#[test]
fn splitsum_diffuse_plane_matches_albedo_times_radiance() {
    let c = Rgb::new(0.6, 0.9, 1.2);
    let env = EnvironmentMap::uniform(16, c).unwrap();
    let pre = prefilter_env(&env, 4).unwrap();
    let camera = front_camera(2.0, 0.4, 16);
    for a in [1.0, 0.8] {
        let g = gbuffer(vec![wall(10.0, 0.0, constant(a, 1.0, 0.0))], &camera);
        let img = splitsum_shade(&g, &pre, &camera).unwrap();
        let mean = hit_mean(&img, &g);
        for k in 0..3 {
            let expect = a * c.channel(k);
            assert!((mean.channel(k) / expect - 1.0).abs() < 0.02, "a={a}: {mean:?}");
        }
    }
}

#[test]
fn black_dielectric_keeps_only_the_specular_floor() {
    let c = Rgb::splat(2.0);
    let pre = prefilter_env(&EnvironmentMap::uniform(16, c).unwrap(), 4).unwrap();
    let n = DVec3::Y;
    for (mu, r) in [(1.0, 0.3), (0.5, 0.6), (0.2, 1.0)] {
        let wo = DVec3::new((1.0_f64 - mu * mu).sqrt(), mu, 0.0);
        let got = shade_point(&pre, n, wo, mu, Rgb::BLACK, r, 0.0).g;
        let expect = 2.0 * energy_table().e_dielectric(mu, r);
        assert!((got / expect - 1.0).abs() < 0.02, "mu={mu} r={r}: {got} vs {expect}");
    }
}

#[test]
fn shading_is_invariant_under_rotation_about_the_normal() {
    // Environment that depends only on elevation, so rotations about +Y leave it unchanged.
    let probe = EnvironmentMap::uniform(64, Rgb::BLACK).unwrap();
    let env = EnvironmentMap::from_fn(64, |x, y| {
        let d = probe.pixel_center_direction(x, y);
        Rgb::new(1.0 + d.y, 0.5 + d.y * d.y, 2.0 - d.y)
    })
    .unwrap();
    let pre = prefilter_env(&env, 6).unwrap();
    let n = DVec3::Y;
    let wo = DVec3::new(0.6, 0.8, 0.0);
    let base = shade_point(&pre, n, wo, 0.8, Rgb::new(0.7, 0.4, 0.2), 0.35, 0.3);
    for angle in [0.7, 2.1, 4.0] {
        let r = DQuat::from_rotation_y(angle) * wo;
        let got = shade_point(&pre, n, r, 0.8, Rgb::new(0.7, 0.4, 0.2), 0.35, 0.3);
        assert!((got - base).map(f64::abs).max_component() < 0.01 * base.max_component(), "{got:?} vs {base:?}");
    }
}

#[test]
fn cache_round_trips_through_exr() {
    let pre = prefilter_env(&smooth_env(16), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pre.exr");
    pre.save(&path).unwrap();
    let back = dr_forge::baselines::PrefilteredEnv::load(&path).unwrap();
    assert_eq!(back.level_count(), 3);
    for (a, b) in pre.levels.iter().zip(&back.levels) {
        for (p, q) in a.raw_pixels().iter().zip(b.raw_pixels()) {
            assert!((*p - *q).map(f64::abs).max_component() < 1e-3 * (1.0 + p.max_component()));
        }
    }
}
