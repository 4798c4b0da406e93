use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};
use dr_forge::baselines::{prefilter_env, splitsum_shade, ssrt_render, DEFAULT_EDGE_RATIO, DEFAULT_LEVELS};
use dr_forge::metrics::ssim;
use dr_forge::pathtracer::{
    brdf_eval, normalize_clip, render_frame, render_gbuffer_raw, sample_brdf, scene_camera, PixelFilter, RenderSettings,
    SceneGeometry,
};
use dr_forge::scene::SurfaceParams;
use dr_forge::scenegen::{generate_scene, GenConfig};
use dr_forge::{Image, Rgb};
use glam::DVec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn settings(spp: u32) -> RenderSettings {
    RenderSettings {
        spp,
        width: 64,
        height: 64,
        ..RenderSettings::default()
    }
}

fn bench_brdf(c: &mut Criterion) {
    let p = SurfaceParams::new(Rgb::new(0.8, 0.5, 0.3), 0.4, 0.5);
    let n = DVec3::Z;
    let wo = DVec3::new(0.3, 0.1, 0.9).normalize();
    let wi = DVec3::new(-0.2, 0.4, 0.8).normalize();
    c.bench_function("brdf_eval", |b| b.iter(|| brdf_eval(black_box(&p), n, wo, wi).unwrap()));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("sample_brdf", |b| b.iter(|| sample_brdf(black_box(&p), n, wo, &mut rng)));
}

fn bench_render(c: &mut Criterion) {
    let scene = generate_scene(&GenConfig::default(), 3).unwrap().resolve(Path::new(".")).unwrap();
    let geometry = SceneGeometry::from_scene(&scene, 0).unwrap();
    let env = scene.frame_env(0).unwrap();
    let s = settings(4);
    let camera = scene_camera(&scene, &s, 0).unwrap();
    let mut g = c.benchmark_group("render");
    g.sample_size(10);
    g.bench_function("bvh_build", |b| b.iter(|| SceneGeometry::from_scene(black_box(&scene), 0).unwrap()));
    g.bench_function("path_trace_64x64_4spp", |b| {
        b.iter(|| render_frame(&geometry, &camera, &env, &s, 0, PixelFilter::Box).unwrap())
    });
    g.bench_function("gbuffer_64x64", |b| b.iter(|| render_gbuffer_raw(&geometry, &camera)));

    let gbuffer = normalize_clip(vec![render_gbuffer_raw(&geometry, &camera)]).remove(0);
    g.bench_function("ssrt_64x64_4spp", |b| {
        b.iter(|| ssrt_render(&gbuffer, &camera, &env, &s, DEFAULT_EDGE_RATIO, 0).unwrap())
    });
    g.bench_function("prefilter_env", |b| b.iter(|| prefilter_env(&env, DEFAULT_LEVELS).unwrap()));
    let pre = prefilter_env(&env, DEFAULT_LEVELS).unwrap();
    g.bench_function("splitsum_64x64", |b| b.iter(|| splitsum_shade(&gbuffer, &pre, &camera).unwrap()));
    g.finish();
}

fn bench_metrics(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut noise = |_, _| Rgb::new(rng.gen(), rng.gen(), rng.gen());
    let a = Image::from_fn(256, 256, &mut noise);
    let b = Image::from_fn(256, 256, &mut noise);
    c.bench_function("ssim_256x256", |bench| bench.iter(|| ssim(black_box(&a), black_box(&b)).unwrap()));
}

criterion_group!(benches, bench_brdf, bench_render, bench_metrics);
criterion_main!(benches);
