//! Dataset packaging: the manifest, per-clip rendering into one directory of
//! per-channel files, and validation of rendered clips.
//!
//! Clip directory layout, one file per frame `NNNN`:
//!
//! ```text
//! scene.json
//! rgb_hdr/NNNN.exr     linear radiance, R G B
//! rgb_ldr/NNNN.png     tonemapped, sRGB
//! normal/NNNN.exr      camera-space normal in R G B
//! depth/NNNN.exr       normalized depth in Y
//! base_color/NNNN.exr  R G B
//! roughness/NNNN.exr   Y
//! metallic/NNNN.exr    Y
//! mask/NNNN.png        hit mask, 0 or 255
//! env_ldr/NNNN.png     Reinhard-tonemapped panorama, sRGB
//! env_log/NNNN.exr     log panorama in R G B
//! env_dir/NNNN.exr     camera-space texel directions in R G B
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use glam::DVec3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io;
use crate::pathtracer::rng::hash_keys;
use crate::pathtracer::{
    normalize_clip, render_frame, render_gbuffer_raw, scene_camera, tonemap_image, DepthRange, GBuffer, PixelFilter,
    RenderSettings, SceneGeometry,
};
use crate::radiometry::{encode_lighting, EnvAugmentation, Rgb};
use crate::scene::{EnvSource, MotionKind, SceneDescription};
use crate::scenegen::{generate_scene_with, GenConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
const SCALAR_CHANNEL: &str = "Y";

/// Hex SHA-256 of the JSON serialization of `value`.
pub fn digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config values serialize");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameFiles {
    pub rgb_hdr: PathBuf,
    pub rgb_ldr: PathBuf,
    pub normal: PathBuf,
    pub depth: PathBuf,
    pub base_color: PathBuf,
    pub roughness: PathBuf,
    pub metallic: PathBuf,
    pub mask: PathBuf,
    pub env_ldr: PathBuf,
    pub env_log: PathBuf,
    pub env_dir: PathBuf,
}

impl FrameFiles {
    /// Paths of frame `frame` relative to the manifest directory.
    pub fn for_frame(clip_dir: &Path, frame: usize) -> FrameFiles {
        let f = |dir: &str, ext: &str| clip_dir.join(dir).join(format!("{frame:04}.{ext}"));
        FrameFiles {
            rgb_hdr: f("rgb_hdr", "exr"),
            rgb_ldr: f("rgb_ldr", "png"),
            normal: f("normal", "exr"),
            depth: f("depth", "exr"),
            base_color: f("base_color", "exr"),
            roughness: f("roughness", "exr"),
            metallic: f("metallic", "exr"),
            mask: f("mask", "png"),
            env_ldr: f("env_ldr", "png"),
            env_log: f("env_log", "exr"),
            env_dir: f("env_dir", "exr"),
        }
    }

    pub fn all(&self) -> [(&'static str, &Path); 11] {
        [
            ("rgb_hdr", &self.rgb_hdr),
            ("rgb_ldr", &self.rgb_ldr),
            ("normal", &self.normal),
            ("depth", &self.depth),
            ("base_color", &self.base_color),
            ("roughness", &self.roughness),
            ("metallic", &self.metallic),
            ("mask", &self.mask),
            ("env_ldr", &self.env_ldr),
            ("env_log", &self.env_log),
            ("env_dir", &self.env_dir),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvRecord {
    pub source: EnvSource,
    pub augmentation: EnvAugmentation,
    /// Log normalizer of each frame's panorama; empty before rendering.
    #[serde(default)]
    pub e_max: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub id: String,
    /// Scene file, relative to the manifest directory.
    pub scene: PathBuf,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub motion: MotionKind,
    pub env: EnvRecord,
    #[serde(default)]
    pub depth_range: Option<DepthRange>,
    #[serde(default)]
    pub settings_digest: Option<String>,
    /// Per-frame outputs, relative to the manifest directory; empty for
    /// clips that have only been generated.
    #[serde(default)]
    pub files: Vec<FrameFiles>,
}

impl ClipRecord {
    pub fn is_rendered(&self) -> bool {
        !self.files.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub config_digest: String,
    pub clips: Vec<ClipRecord>,
}

impl DatasetManifest {
    pub fn new(config_digest: String) -> Self {
        DatasetManifest {
            schema_version: SCHEMA_VERSION,
            config_digest,
            clips: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "unknown manifest schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut seen = HashSet::new();
        for c in &self.clips {
            if !seen.insert(&c.id) {
                return Err(Error::Validation(format!("duplicate clip id {:?}", c.id)));
            }
        }
        Ok(())
    }
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    manifest.validate()?;
    io::write_json(path, manifest)
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let value: serde_json::Value = io::read_json(path)?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::Format(format!(
                "{}: unknown manifest schema version {v}",
                path.display()
            )))
        }
        None => return Err(Error::Format(format!("{}: missing schema_version", path.display()))),
    }
    let manifest: DatasetManifest = serde_json::from_value(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn clip_id(seed: u64) -> String {
    format!("clip_{seed:06}")
}

fn base_record(id: String, scene_rel: PathBuf, scene: &SceneDescription, width: usize, height: usize) -> ClipRecord {
    ClipRecord {
        id,
        scene: scene_rel,
        frames: scene.frame_count(),
        width,
        height,
        seed: scene.seed,
        motion: scene.motion.kind,
        env: EnvRecord {
            source: scene.env.source.clone(),
            augmentation: scene.env.augmentation,
            e_max: Vec::new(),
        },
        depth_range: None,
        settings_digest: None,
        files: Vec::new(),
    }
}

/// Generates `count` scenes with seeds `seed_base..seed_base + count` into
/// `out_dir/scenes/` and writes `out_dir/manifest.json`.
pub fn gen_scenes(config: &GenConfig, count: usize, seed_base: u64, out_dir: &Path) -> Result<DatasetManifest> {
    config.validate()?;
    let pools = config.pools()?;
    let scenes: Vec<SceneDescription> = (0..count as u64)
        .into_par_iter()
        .map(|i| generate_scene_with(config, &pools, seed_base + i, None))
        .collect::<Result<_>>()?;
    let mut manifest = DatasetManifest::new(digest(config));
    for scene in &scenes {
        let id = clip_id(scene.seed);
        let rel = PathBuf::from("scenes").join(format!("{id}.json"));
        scene.save(&out_dir.join(&rel))?;
        manifest.clips.push(base_record(id, rel, scene, config.resolution, config.resolution));
    }
    write_manifest(&manifest, &out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Keeps the first `frames` frames of every track.
pub fn truncate_frames(scene: &mut SceneDescription, frames: usize) {
    scene.camera.poses.truncate(frames);
    scene.motion.body_transforms.truncate(frames);
    scene.motion.env_yaw.truncate(frames);
}

fn vec3_to_rgb(img: &Image<DVec3>) -> Image<Rgb> {
    img.map(|v| Rgb::new(v.x, v.y, v.z))
}

fn rgb_to_vec3(img: &Image<Rgb>) -> Image<DVec3> {
    img.map(|p| DVec3::new(p.r, p.g, p.b))
}

/// Renders one clip into `root/clip_rel`. Frames, G-buffers (depth
/// normalized over the clip) and lighting encodings are written per frame.
pub fn render_clip(
    scene: &SceneDescription,
    scene_dir: &Path,
    root: &Path,
    clip_rel: &Path,
    id: &str,
    settings: &RenderSettings,
) -> Result<ClipRecord> {
    settings.validate()?;
    let started = Instant::now();
    let resolved = scene.resolve(scene_dir)?;
    let frames = scene.frame_count();
    let clip_settings = RenderSettings {
        seed: hash_keys(&[settings.seed, scene.seed]),
        ..settings.clone()
    };
    let scene_rel = clip_rel.join("scene.json");
    scene.save(&root.join(&scene_rel))?;

    let mut raw = Vec::with_capacity(frames);
    let mut e_max = Vec::with_capacity(frames);
    let mut files = Vec::with_capacity(frames);
    for f in 0..frames {
        let geometry = SceneGeometry::from_scene(&resolved, f)?;
        let env = resolved.frame_env(f)?;
        let camera = scene_camera(&resolved, settings, f)?;
        let hdr = render_frame(&geometry, &camera, &env, &clip_settings, f as u32, PixelFilter::Box)?;
        let rel = FrameFiles::for_frame(clip_rel, f);
        io::write_rgb_exr(&root.join(&rel.rgb_hdr), &hdr, None)?;
        io::write_png_srgb(&root.join(&rel.rgb_ldr), &tonemap_image(&hdr, settings.tonemap))?;

        let enc = encode_lighting(&env, camera.pose.world_to_camera())?;
        io::write_png_srgb(&root.join(&rel.env_ldr), &enc.e_ldr)?;
        io::write_rgb_exr(&root.join(&rel.env_log), &enc.e_log, None)?;
        io::write_rgb_exr(&root.join(&rel.env_dir), &vec3_to_rgb(&enc.e_dir), None)?;
        e_max.push(enc.e_max);

        raw.push(render_gbuffer_raw(&geometry, &camera));
        files.push(rel);
    }
    let gbuffers = normalize_clip(raw);
    for (g, rel) in gbuffers.iter().zip(&files) {
        write_gbuffer(root, rel, g)?;
    }
    let mut record = base_record(id.to_string(), scene_rel, scene, settings.width, settings.height);
    record.env.e_max = e_max;
    record.depth_range = gbuffers.first().map(|g| g.depth_range);
    record.settings_digest = Some(digest(settings));
    record.files = files;
    log::info!(
        "rendered {id}: {frames} frames at {}x{} and {} spp in {:.2?}",
        settings.width,
        settings.height,
        settings.spp,
        started.elapsed()
    );
    Ok(record)
}

fn write_gbuffer(root: &Path, rel: &FrameFiles, g: &GBuffer) -> Result<()> {
    io::write_rgb_exr(&root.join(&rel.normal), &vec3_to_rgb(&g.normal), None)?;
    io::write_scalar_exr(&root.join(&rel.depth), &g.depth, SCALAR_CHANNEL)?;
    io::write_rgb_exr(&root.join(&rel.base_color), &g.base_color, None)?;
    io::write_scalar_exr(&root.join(&rel.roughness), &g.roughness, SCALAR_CHANNEL)?;
    io::write_scalar_exr(&root.join(&rel.metallic), &g.metallic, SCALAR_CHANNEL)?;
    io::write_png_gray(&root.join(&rel.mask), &g.hit.map(|h| if *h { 1.0 } else { 0.0 }))
}

/// G-buffer of one rendered frame, read back from disk.
pub fn read_gbuffer(root: &Path, record: &ClipRecord, frame: usize) -> Result<GBuffer> {
    let rel = record.files.get(frame).ok_or(Error::Index {
        index: frame,
        len: record.files.len(),
    })?;
    let depth_range = record
        .depth_range
        .ok_or_else(|| Error::Format(format!("clip {} has no depth range", record.id)))?;
    Ok(GBuffer {
        normal: rgb_to_vec3(&io::read_rgb_exr(&root.join(&rel.normal), None)?),
        depth: io::read_scalar_exr(&root.join(&rel.depth), SCALAR_CHANNEL)?,
        base_color: io::read_rgb_exr(&root.join(&rel.base_color), None)?,
        roughness: io::read_scalar_exr(&root.join(&rel.roughness), SCALAR_CHANNEL)?,
        metallic: io::read_scalar_exr(&root.join(&rel.metallic), SCALAR_CHANNEL)?,
        hit: io::read_png_gray(&root.join(&rel.mask))?.map(|v| *v > 0.5),
        depth_range,
    })
}

pub fn read_hdr(root: &Path, record: &ClipRecord, frame: usize) -> Result<Image<Rgb>> {
    let rel = record.files.get(frame).ok_or(Error::Index {
        index: frame,
        len: record.files.len(),
    })?;
    io::read_rgb_exr(&root.join(&rel.rgb_hdr), None)
}

/// Renders every clip of the manifest at `manifest_path` into `out_dir`,
/// optionally keeping only the first `max_frames` frames, and writes the
/// output manifest there.
pub fn render_dataset(
    manifest_path: &Path,
    out_dir: &Path,
    settings: &RenderSettings,
    max_frames: Option<usize>,
) -> Result<DatasetManifest> {
    settings.validate()?;
    if max_frames == Some(0) {
        return Err(Error::domain("max_frames must be at least 1"));
    }
    let input = read_manifest(manifest_path)?;
    let in_root = manifest_path.parent().unwrap_or(Path::new("."));
    let mut out = DatasetManifest::new(digest(&(&input.config_digest, settings, max_frames)));
    for clip in &input.clips {
        let scene_path = in_root.join(&clip.scene);
        let mut scene = SceneDescription::load(&scene_path)?;
        if let Some(n) = max_frames {
            truncate_frames(&mut scene, n);
        }
        let scene_dir = scene_path.parent().unwrap_or(Path::new("."));
        let clip_rel = PathBuf::from("clips").join(&clip.id);
        out.clips
            .push(render_clip(&scene, scene_dir, out_dir, &clip_rel, &clip.id, settings)?);
    }
    write_manifest(&out, &out_dir.join(MANIFEST_FILE))?;
    Ok(out)
}

/// One problem found while validating a clip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub clip: String,
    pub frame: Option<usize>,
    pub path: Option<PathBuf>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.clip)?;
        if let Some(i) = self.frame {
            write!(f, " frame {i}")?;
        }
        if let Some(p) = &self.path {
            write!(f, " ({})", p.display())?;
        }
        write!(f, ": {}", self.message)
    }
}

struct Checker<'a> {
    record: &'a ClipRecord,
    root: &'a Path,
    findings: Vec<Finding>,
}

impl Checker<'_> {
    fn report(&mut self, frame: Option<usize>, path: Option<&Path>, message: impl Into<String>) {
        self.findings.push(Finding {
            clip: self.record.id.clone(),
            frame,
            path: path.map(Path::to_path_buf),
            message: message.into(),
        });
    }

    /// Loads a file, reporting a missing or unreadable file.
    fn load<T>(&mut self, frame: usize, rel: &Path, read: impl FnOnce(&Path) -> Result<T>) -> Option<T> {
        let path = self.root.join(rel);
        if !path.is_file() {
            self.report(Some(frame), Some(rel), "missing file");
            return None;
        }
        match read(&path) {
            Ok(v) => Some(v),
            Err(e) => {
                self.report(Some(frame), Some(rel), format!("unreadable file: {e}"));
                None
            }
        }
    }

    fn shape<T>(&mut self, frame: usize, rel: &Path, img: &Image<T>, dims: (usize, usize)) -> bool {
        if img.dims() == dims {
            true
        } else {
            let (w, h) = img.dims();
            self.report(Some(frame), Some(rel), format!("shape mismatch: {w}x{h}, expected {}x{}", dims.0, dims.1));
            false
        }
    }
}

/// Checks a clip's files against the record: presence, shapes, value
/// ranges and encoding invariants. Problems are returned, not raised.
pub fn validate_clip(record: &ClipRecord, root: &Path) -> Vec<Finding> {
    let mut c = Checker {
        record,
        root,
        findings: Vec::new(),
    };
    let scene_path = root.join(&record.scene);
    if !scene_path.is_file() {
        c.report(None, Some(&record.scene), "missing file");
    } else {
        match SceneDescription::load(&scene_path) {
            Ok(s) if s.frame_count() != record.frames => {
                c.report(None, Some(&record.scene), format!("scene has {} frames, record says {}", s.frame_count(), record.frames))
            }
            Ok(_) => {}
            Err(e) => c.report(None, Some(&record.scene), format!("invalid scene: {e}")),
        }
    }
    if !record.is_rendered() {
        return c.findings;
    }
    if record.files.len() != record.frames {
        c.report(None, None, format!("{} frame entries for {} frames", record.files.len(), record.frames));
    }
    if record.env.e_max.len() != record.files.len() {
        c.report(None, None, "e_max does not cover every frame");
    }
    for (i, e) in record.env.e_max.iter().enumerate() {
        if !(*e > 0.0 && e.is_finite()) {
            c.report(Some(i), None, format!("e_max {e} is not positive"));
        }
    }
    match record.depth_range {
        Some(r) if r.z_min.is_finite() && r.z_max.is_finite() && r.z_min <= r.z_max => {}
        _ => c.report(None, None, "invalid or missing depth range"),
    }
    let dims = (record.width, record.height);
    let mut env_dims = None;
    for (f, rel) in record.files.iter().enumerate() {
        if let Some(img) = c.load(f, &rel.rgb_hdr, |p| io::read_rgb_exr(p, None)) {
            if c.shape(f, &rel.rgb_hdr, &img, dims) && img.pixels().iter().any(|p| !p.is_valid_radiance()) {
                c.report(Some(f), Some(&rel.rgb_hdr), "radiance not finite and non-negative");
            }
        }
        if let Some(img) = c.load(f, &rel.rgb_ldr, io::read_png_srgb) {
            c.shape(f, &rel.rgb_ldr, &img, dims);
        }
        let hit = c.load(f, &rel.mask, io::read_png_gray).filter(|m| c.shape(f, &rel.mask, m, dims));
        if let Some(img) = c.load(f, &rel.depth, |p| io::read_scalar_exr(p, SCALAR_CHANNEL)) {
            if c.shape(f, &rel.depth, &img, dims) && img.pixels().iter().any(|d| !(-1.0..=1.0).contains(d)) {
                c.report(Some(f), Some(&rel.depth), "depth out of range");
            }
        }
        if let Some(img) = c.load(f, &rel.normal, |p| io::read_rgb_exr(p, None)) {
            if c.shape(f, &rel.normal, &img, dims) {
                if let Some(hit) = &hit {
                    let bad = img
                        .pixels()
                        .iter()
                        .zip(hit.pixels())
                        .any(|(n, h)| *h > 0.5 && (DVec3::new(n.r, n.g, n.b).length() - 1.0).abs() > 1e-4);
                    if bad {
                        c.report(Some(f), Some(&rel.normal), "normal not unit length on a hit pixel");
                    }
                }
            }
        }
        if let Some(img) = c.load(f, &rel.base_color, |p| io::read_rgb_exr(p, None)) {
            if c.shape(f, &rel.base_color, &img, dims)
                && img.pixels().iter().any(|p| p.min_component() < 0.0 || p.max_component() > 1.0)
            {
                c.report(Some(f), Some(&rel.base_color), "material out of range");
            }
        }
        for rel_path in [&rel.roughness, &rel.metallic] {
            if let Some(img) = c.load(f, rel_path, |p| io::read_scalar_exr(p, SCALAR_CHANNEL)) {
                if c.shape(f, rel_path, &img, dims) && img.pixels().iter().any(|v| !(0.0..=1.0).contains(v)) {
                    c.report(Some(f), Some(rel_path), "material out of range");
                }
            }
        }
        if let Some(img) = c.load(f, &rel.env_log, |p| io::read_rgb_exr(p, None)) {
            let d = *env_dims.get_or_insert(img.dims());
            if c.shape(f, &rel.env_log, &img, d) && img.pixels().iter().any(|p| p.min_component() < 0.0 || p.max_component() > 1.0) {
                c.report(Some(f), Some(&rel.env_log), "e_log out of range");
            }
        }
        if let Some(img) = c.load(f, &rel.env_dir, |p| io::read_rgb_exr(p, None)) {
            let d = *env_dims.get_or_insert(img.dims());
            if c.shape(f, &rel.env_dir, &img, d)
                && img.pixels().iter().any(|n| (DVec3::new(n.r, n.g, n.b).length() - 1.0).abs() > 1e-5)
            {
                c.report(Some(f), Some(&rel.env_dir), "e_dir not unit length");
            }
        }
        if let Some(img) = c.load(f, &rel.env_ldr, io::read_png_srgb) {
            if let Some(d) = env_dims {
                c.shape(f, &rel.env_ldr, &img, d);
            }
        }
    }
    c.findings
}

/// Validates every clip of a manifest in parallel.
pub fn validate_dataset(manifest_path: &Path) -> Result<Vec<Finding>> {
    let manifest = read_manifest(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    Ok(manifest
        .clips
        .par_iter()
        .flat_map_iter(|c| validate_clip(c, root))
        .collect())
}
