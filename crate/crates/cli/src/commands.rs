use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use dr_forge::baselines::{prefilter_env, splitsum_shade, ssrt_render, PrefilteredEnv};
use dr_forge::compositor::{composite_insertion_with, CompositeInputs};
use dr_forge::dataset_io::{self, digest, read_gbuffer, read_manifest, MANIFEST_FILE};
use dr_forge::io;
use dr_forge::pathtracer::rng::hash_keys;
use dr_forge::pathtracer::{scene_camera, tonemap_image, RenderSettings};
use dr_forge::radiometry::{augment_env, encode_lighting};
use dr_forge::{EnvironmentMap, SceneDescription};
use glam::DMat3;
use serde::Serialize;

use crate::config::PipelineConfig;

/// `path` itself if it names a file, otherwise its manifest.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

pub fn gen_scenes(cfg: &PipelineConfig, count: usize, seed_base: Option<u64>, out: &Path) -> Result<()> {
    let seed_base = seed_base.unwrap_or(cfg.seed);
    let started = Instant::now();
    let manifest = dataset_io::gen_scenes(&cfg.generator, count, seed_base, out)?;
    log::info!(
        "generated {} scenes (seeds {}..{}) into {} in {:.2?}",
        manifest.clips.len(),
        seed_base,
        seed_base + count as u64,
        out.display(),
        started.elapsed()
    );
    Ok(())
}

pub fn render_dataset(cfg: &PipelineConfig, manifest: &Path, out: &Path) -> Result<()> {
    let started = Instant::now();
    let m = dataset_io::render_dataset(
        &manifest_path(manifest),
        out,
        &cfg.render_settings(),
        Some(cfg.renderer.frames),
    )?;
    log::info!("rendered {} clips into {} in {:.2?}", m.clips.len(), out.display(), started.elapsed());
    Ok(())
}

#[derive(Serialize)]
struct EncodingInfo {
    width: usize,
    height: usize,
    e_max: f64,
    yaw: f64,
    flip: bool,
    scale: f64,
}

pub struct EncodeArgs<'a> {
    pub env: &'a Path,
    pub out: &'a Path,
    pub yaw: f64,
    pub flip: bool,
    pub scale: f64,
    pub scene: Option<&'a Path>,
    pub frame: usize,
}

pub fn encode_env(args: &EncodeArgs) -> Result<()> {
    let env = augment_env(&io::read_env(args.env)?, args.yaw, args.flip, args.scale)?;
    let world_to_camera = match args.scene {
        Some(p) => SceneDescription::load(p)?.camera.pose_at(args.frame)?.world_to_camera(),
        None => DMat3::IDENTITY,
    };
    let enc = encode_lighting(&env, world_to_camera)?;
    io::write_png_srgb(&args.out.join("e_ldr.png"), &enc.e_ldr)?;
    io::write_rgb_exr(&args.out.join("e_log.exr"), &enc.e_log, None)?;
    io::write_rgb_exr(
        &args.out.join("e_dir.exr"),
        &enc.e_dir.map(|d| dr_forge::Rgb::new(d.x, d.y, d.z)),
        None,
    )?;
    let info = EncodingInfo {
        width: env.width(),
        height: env.height(),
        e_max: enc.e_max,
        yaw: args.yaw,
        flip: args.flip,
        scale: args.scale,
    };
    io::write_json(&args.out.join("encoding.json"), &info)?;
    log::info!("encoded {} into {} (e_max {:.6})", args.env.display(), args.out.display(), enc.e_max);
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BaselineMethod {
    Ssrt,
    Splitsum,
}

/// Prefiltered environments keyed by content, kept in memory and on disk.
struct PrefilterCache {
    dir: PathBuf,
    levels: usize,
    loaded: HashMap<String, Arc<PrefilteredEnv>>,
}

impl PrefilterCache {
    fn get(&mut self, env: &EnvironmentMap) -> Result<Arc<PrefilteredEnv>> {
        let baked = env.baked();
        let pixels: Vec<[f64; 3]> = baked.raw_pixels().iter().map(|p| p.to_array()).collect();
        let key = digest(&(self.levels, baked.width(), baked.height(), pixels));
        if let Some(p) = self.loaded.get(&key) {
            return Ok(p.clone());
        }
        let path = self.dir.join(format!("{}.exr", &key[..16]));
        let pre = if path.is_file() {
            PrefilteredEnv::load(&path)?
        } else {
            let started = Instant::now();
            let pre = prefilter_env(env, self.levels)?;
            pre.save(&path)?;
            log::info!("prefiltered environment {} in {:.2?}", path.display(), started.elapsed());
            pre
        };
        let pre = Arc::new(pre);
        self.loaded.insert(key, pre.clone());
        Ok(pre)
    }
}

pub struct BaselineArgs<'a> {
    pub method: BaselineMethod,
    pub gbuffer: &'a Path,
    pub env: Option<&'a Path>,
    pub out: &'a Path,
    pub clip: Option<&'a str>,
}

/// Shades every rendered frame of a dataset with a baseline. Each clip's
/// own environment is used unless `env` overrides it.
pub fn baseline(cfg: &PipelineConfig, args: &BaselineArgs) -> Result<()> {
    let manifest_file = manifest_path(args.gbuffer);
    let manifest = read_manifest(&manifest_file)?;
    let root = manifest_file.parent().unwrap_or(Path::new("."));
    let fixed_env = args.env.map(io::read_env).transpose()?;
    let base = cfg.render_settings();
    let mut cache = PrefilterCache {
        dir: args.out.join("prefiltered"),
        levels: cfg.baselines.levels,
        loaded: HashMap::new(),
    };
    let clips: Vec<_> = manifest
        .clips
        .iter()
        .filter(|c| c.is_rendered() && args.clip.is_none_or(|id| c.id == id))
        .collect();
    if clips.is_empty() {
        bail!("no rendered clips to shade in {}", manifest_file.display());
    }
    for record in clips {
        let started = Instant::now();
        let scene_file = root.join(&record.scene);
        let scene = SceneDescription::load(&scene_file)?;
        let resolved = scene.resolve(scene_file.parent().unwrap_or(Path::new(".")))?;
        let settings = RenderSettings {
            width: record.width,
            height: record.height,
            seed: hash_keys(&[base.seed, record.seed]),
            ..base.clone()
        };
        for f in 0..record.files.len() {
            let gbuffer = read_gbuffer(root, record, f)?;
            let camera = scene_camera(&resolved, &settings, f)?;
            let env = match &fixed_env {
                Some(e) => e.clone(),
                None => resolved.frame_env(f)?,
            };
            let img = match args.method {
                BaselineMethod::Ssrt => ssrt_render(&gbuffer, &camera, &env, &settings, cfg.baselines.edge_ratio, f as u32)?,
                BaselineMethod::Splitsum => splitsum_shade(&gbuffer, cache.get(&env)?.as_ref(), &camera)?,
            };
            let stem = args.out.join(&record.id).join(format!("{f:04}"));
            io::write_rgb_exr(&stem.with_extension("exr"), &img, None)?;
            io::write_png_srgb(&stem.with_extension("png"), &tonemap_image(&img, settings.tonemap))?;
        }
        log::info!(
            "{:?} shaded {} ({} frames) in {:.2?}",
            args.method,
            record.id,
            record.files.len(),
            started.elapsed()
        );
    }
    Ok(())
}

pub struct CompositeArgs<'a> {
    pub bg: &'a Path,
    pub ins: &'a Path,
    pub bg_rerender: &'a Path,
    pub mask: &'a Path,
    pub out: &'a Path,
}

pub fn composite(cfg: &PipelineConfig, args: &CompositeArgs) -> Result<()> {
    let inputs = CompositeInputs {
        i_bg: io::read_rgb_exr(args.bg, None)?,
        i_ins_star: io::read_rgb_exr(args.ins, None)?,
        i_bg_star: io::read_rgb_exr(args.bg_rerender, None)?,
        mask: io::read_png_gray(args.mask).with_context(|| format!("reading mask {}", args.mask.display()))?,
    };
    let out = composite_insertion_with(&inputs, cfg.compositor.epsilon, cfg.compositor.ratio_max)?;
    io::write_rgb_exr(args.out, &out, None)?;
    log::info!("composited into {}", args.out.display());
    Ok(())
}

/// Prints every finding; returns whether the dataset is clean.
pub fn validate(path: &Path) -> Result<bool> {
    let findings = dataset_io::validate_dataset(&manifest_path(path))?;
    for f in &findings {
        println!("{f}");
    }
    if findings.is_empty() {
        log::info!("{}: no findings", path.display());
    } else {
        log::error!("{}: {} findings", path.display(), findings.len());
    }
    Ok(findings.is_empty())
}
