//! Procedural scene synthesis: a textured ground plane, up to three assets
//! and three primitives resting on it without overlapping, a randomized
//! environment and one of five motion types.

mod motion;

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use glam::{DQuat, DVec3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::pathtracer::rng::hash_keys;
use crate::radiometry::{EnvAugmentation, Rgb, SkyParams};
use crate::scene::{
    Aabb, BuiltinMesh, CameraPose, CameraTrack, ColorSource, ColorSpace, EnvSource, EnvSpec, GroundPlane, Material,
    MotionKind, Pattern, ProceduralTexture, ScalarSource, SceneDescription, SceneObject, Shape, TextureRef, Transform,
    TriangleMesh,
};

pub use motion::{apply_motion, body_meshes, frame_aabbs, generate_motion, Motion, MotionParams};

/// Closed interval sampled uniformly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.max > self.min {
            rng.gen_range(self.min..=self.max)
        } else {
            self.min
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.min.is_finite() && self.max.is_finite() && self.min <= self.max {
            Ok(())
        } else {
            Err(Error::Validation(format!("{name}: invalid range [{}, {}]", self.min, self.max)))
        }
    }
}

/// Relative frequency of each motion type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionWeights {
    pub orbit: f64,
    pub oscillation: f64,
    pub light_rotation: f64,
    pub object_rotation: f64,
    pub object_translation: f64,
}

impl Default for MotionWeights {
    fn default() -> Self {
        MotionWeights {
            orbit: 1.0,
            oscillation: 1.0,
            light_rotation: 1.0,
            object_rotation: 1.0,
            object_translation: 1.0,
        }
    }
}

impl MotionWeights {
    fn weight(&self, kind: MotionKind) -> f64 {
        match kind {
            MotionKind::Static => 0.0,
            MotionKind::Orbit => self.orbit,
            MotionKind::Oscillation => self.oscillation,
            MotionKind::LightRotation => self.light_rotation,
            MotionKind::ObjectRotation => self.object_rotation,
            MotionKind::ObjectTranslation => self.object_translation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    /// Directories of OBJ assets. Empty means the built-in mesh pool.
    pub asset_dirs: Vec<PathBuf>,
    /// Directories of PNG textures. Empty means procedural textures.
    pub texture_dirs: Vec<PathBuf>,
    /// Directories of EXR or PNG environment maps. Empty means procedural skies.
    pub env_dirs: Vec<PathBuf>,
    pub max_objects: usize,
    pub max_primitives: usize,
    /// Half side of the square ground plane, meters.
    pub plane_half_extent: f64,
    /// Bodies are placed with their boxes inside this half side, meters.
    pub placement_half_extent: f64,
    pub object_scale: Range,
    pub primitive_scale: Range,
    /// Yaw of placed bodies, radians.
    pub yaw: Range,
    pub camera_distance: Range,
    /// Camera elevation above the plane, radians.
    pub camera_elevation: Range,
    /// Vertical field of view, radians.
    pub vfov: Range,
    /// Height of procedural skies in pixels.
    pub env_height: usize,
    pub env_intensity: Range,
    pub env_flip_probability: f64,
    /// Chance that a primitive gets a texture instead of a constant material.
    pub primitive_texture_probability: f64,
    pub motion_weights: MotionWeights,
    pub motion: MotionParams,
    pub frames_per_clip: usize,
    pub resolution: usize,
    pub retry_limit: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            asset_dirs: Vec::new(),
            texture_dirs: Vec::new(),
            env_dirs: Vec::new(),
            max_objects: 3,
            max_primitives: 3,
            plane_half_extent: 4.0,
            placement_half_extent: 1.6,
            object_scale: Range::new(0.5, 1.0),
            primitive_scale: Range::new(0.25, 0.6),
            yaw: Range::new(0.0, TAU),
            camera_distance: Range::new(3.5, 5.0),
            camera_elevation: Range::new(0.2, 0.6),
            vfov: Range::new(0.6, 0.9),
            env_height: 128,
            env_intensity: Range::new(0.6, 1.6),
            env_flip_probability: 0.5,
            primitive_texture_probability: 0.5,
            motion_weights: MotionWeights::default(),
            motion: MotionParams::default(),
            frames_per_clip: 24,
            resolution: 512,
            retry_limit: 200,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Validation(m.into()));
        if self.max_objects < 1 {
            return fail("max_objects must be at least 1");
        }
        if self.max_objects > crate::scene::MAX_OBJECTS || self.max_primitives > crate::scene::MAX_PRIMITIVES {
            return fail("at most 3 objects and 3 primitives are supported");
        }
        if self.retry_limit < 1 {
            return fail("retry_limit must be at least 1");
        }
        if self.frames_per_clip < 1 {
            return fail("frames_per_clip must be at least 1");
        }
        if self.resolution < 1 || self.env_height < 2 {
            return fail("resolution and env_height must be positive");
        }
        if !(self.plane_half_extent > 0.0 && self.placement_half_extent > 0.0) {
            return fail("plane extents must be positive");
        }
        if self.placement_half_extent > self.plane_half_extent {
            return fail("placement area must lie on the plane");
        }
        for (name, r) in [
            ("object_scale", self.object_scale),
            ("primitive_scale", self.primitive_scale),
            ("yaw", self.yaw),
            ("camera_distance", self.camera_distance),
            ("camera_elevation", self.camera_elevation),
            ("vfov", self.vfov),
            ("env_intensity", self.env_intensity),
        ] {
            r.validate(name)?;
        }
        if self.object_scale.min <= 0.0 || self.primitive_scale.min <= 0.0 || self.camera_distance.min <= 0.0 {
            return fail("scales and camera distance must be positive");
        }
        if !(self.vfov.min > 0.0 && self.vfov.max < std::f64::consts::PI) {
            return fail("vfov must lie in (0, pi)");
        }
        if !(0.0..=1.0).contains(&self.env_flip_probability) || !(0.0..=1.0).contains(&self.primitive_texture_probability) {
            return fail("probabilities must lie in [0, 1]");
        }
        let w = &self.motion_weights;
        let weights = [w.orbit, w.oscillation, w.light_rotation, w.object_rotation, w.object_translation];
        if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
            return fail("motion weights must be non-negative with a positive sum");
        }
        self.motion.validate()
    }

    /// Lists the configured pools as absolute paths, falling back to
    /// built-in generators for pools without directories. A configured
    /// directory with no usable files is an error.
    pub fn pools(&self) -> Result<Pools> {
        fn scan(dirs: &[PathBuf], exts: &[&str], what: &str) -> Result<Vec<PathBuf>> {
            let mut out = Vec::new();
            for d in dirs {
                let before = out.len();
                for ext in exts {
                    for f in io::list_files(d, ext)? {
                        out.push(std::fs::canonicalize(&f).map_err(|e| Error::Io { path: f.clone(), source: e })?);
                    }
                }
                if out.len() == before {
                    return Err(Error::Validation(format!("{what} directory {} has no usable files", d.display())));
                }
            }
            out.sort();
            Ok(out)
        }
        Ok(Pools {
            assets: scan(&self.asset_dirs, &["obj"], "asset")?,
            textures: scan(&self.texture_dirs, &["png"], "texture")?,
            envs: scan(&self.env_dirs, &["exr", "png"], "environment")?,
        })
    }
}

/// Asset files backing a generator run; empty lists select built-in pools.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Pools {
    pub assets: Vec<PathBuf>,
    pub textures: Vec<PathBuf>,
    pub envs: Vec<PathBuf>,
}

const SCENE_STREAM: u64 = 0x7363_656e_65;
const MOTION_STREAM: u64 = 0x6d6f_7469_6f6e;

fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(hash_keys(&[seed, tag]))
}

fn random_texture(rng: &mut ChaCha8Rng, pools: &Pools) -> TextureRef {
    if !pools.textures.is_empty() {
        let path = pools.textures[rng.gen_range(0..pools.textures.len())].clone();
        return TextureRef::File {
            path,
            color_space: ColorSpace::Srgb,
        };
    }
    let patterns = [Pattern::Checker, Pattern::Stripes, Pattern::Noise, Pattern::Tiles];
    TextureRef::Procedural(ProceduralTexture {
        pattern: patterns[rng.gen_range(0..patterns.len())],
        color_a: random_albedo(rng),
        color_b: random_albedo(rng),
        frequency: rng.gen_range(2..=8),
        seed: rng.gen(),
        resolution: 128,
    })
}

fn random_albedo(rng: &mut ChaCha8Rng) -> Rgb {
    Rgb::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95))
}

fn textured_material(rng: &mut ChaCha8Rng, pools: &Pools) -> Material {
    Material {
        base_color: ColorSource::Texture {
            texture: random_texture(rng, pools),
        },
        roughness: ScalarSource::Constant {
            value: rng.gen_range(0.2..1.0),
        },
        metallic: ScalarSource::Constant {
            value: if rng.gen_bool(0.2) { rng.gen_range(0.5..1.0) } else { 0.0 },
        },
        uv_scale: rng.gen_range(1.0..3.0),
    }
}

fn monolithic_material(rng: &mut ChaCha8Rng) -> Material {
    Material::constant(random_albedo(rng), rng.gen_range(0.05..1.0), rng.gen_range(0.0..1.0))
}

fn random_env(rng: &mut ChaCha8Rng, pools: &Pools, config: &GenConfig) -> EnvSpec {
    let source = if pools.envs.is_empty() {
        EnvSource::Sky(SkyParams::random(rng, config.env_height))
    } else {
        EnvSource::File {
            path: pools.envs[rng.gen_range(0..pools.envs.len())].clone(),
        }
    };
    EnvSpec {
        source,
        augmentation: EnvAugmentation {
            yaw: rng.gen_range(0.0..TAU),
            flip: rng.gen_bool(config.env_flip_probability),
            scale: config.env_intensity.sample(rng),
        },
    }
}

/// Tessellations shared across bodies of one generator run.
#[derive(Default)]
struct MeshCache(HashMap<String, TriangleMesh>);

impl MeshCache {
    fn get(&mut self, shape: &Shape) -> Result<&TriangleMesh> {
        let key = serde_json::to_string(shape).expect("shapes serialize");
        if !self.0.contains_key(&key) {
            let m = shape.tessellate(Path::new("."))?;
            self.0.insert(key.clone(), m);
        }
        Ok(&self.0[&key])
    }
}

/// Rejection-samples a resting position for a body so its box lies in the
/// placement square and overlaps none of `placed`.
fn place(
    rng: &mut ChaCha8Rng,
    mesh: &TriangleMesh,
    rotation: DQuat,
    scale: f64,
    placed: &[Aabb],
    config: &GenConfig,
) -> Result<Option<(Transform, Aabb)>> {
    let local = mesh.aabb(&Transform::new(DVec3::ZERO, rotation, scale))?;
    let half = config.placement_half_extent;
    let ext = local.extent();
    if ext.x > 2.0 * half || ext.z > 2.0 * half {
        return Ok(None);
    }
    for _ in 0..config.retry_limit {
        let cx = rng.gen_range(-half - local.min.x..=half - local.max.x);
        let cz = rng.gen_range(-half - local.min.z..=half - local.max.z);
        let t = DVec3::new(cx, -local.min.y, cz);
        let bounds = local.translated(t);
        if placed.iter().all(|b| !b.overlaps(&bounds)) {
            return Ok(Some((Transform::new(t, rotation, scale), bounds)));
        }
    }
    Ok(None)
}

fn generation_error(seed: u64, reason: impl Into<String>) -> Error {
    Error::Generation {
        seed,
        reason: reason.into(),
    }
}

/// Samples the static part of a scene: plane, bodies, environment and the
/// initial camera, held for `config.frames_per_clip` frames.
pub fn generate_layout(config: &GenConfig, pools: &Pools, seed: u64) -> Result<SceneDescription> {
    config.validate()?;
    let mut rng = stream(seed, SCENE_STREAM);
    let mut cache = MeshCache::default();
    let ground = GroundPlane {
        half_extent: config.plane_half_extent,
        material: textured_material(&mut rng, pools),
    };
    let n_objects = rng.gen_range(1..=config.max_objects);
    let n_primitives = rng.gen_range(0..=config.max_primitives);
    let mut placed: Vec<Aabb> = Vec::new();
    let mut objects = Vec::new();
    for i in 0..n_objects {
        let shape = if pools.assets.is_empty() {
            Shape::Builtin {
                mesh: BuiltinMesh::ALL[rng.gen_range(0..BuiltinMesh::ALL.len())],
            }
        } else {
            Shape::Obj {
                path: pools.assets[rng.gen_range(0..pools.assets.len())].clone(),
            }
        };
        let rotation = DQuat::from_rotation_y(config.yaw.sample(&mut rng));
        let scale = config.object_scale.sample(&mut rng);
        let material = if rng.gen_bool(0.5) {
            textured_material(&mut rng, pools)
        } else {
            monolithic_material(&mut rng)
        };
        let mesh = cache.get(&shape)?;
        let (transform, bounds) = place(&mut rng, mesh, rotation, scale, &placed, config)?
            .ok_or_else(|| generation_error(seed, format!("could not place object {i} after {} tries", config.retry_limit)))?;
        placed.push(bounds);
        objects.push(SceneObject {
            name: format!("object{i}"),
            shape,
            transform,
            material,
        });
    }
    let mut primitives = Vec::new();
    for i in 0..n_primitives {
        let shape = [Shape::Cube, Shape::Sphere, Shape::Cylinder][rng.gen_range(0..3)].clone();
        let rotation = DQuat::from_rotation_y(config.yaw.sample(&mut rng));
        let scale = config.primitive_scale.sample(&mut rng);
        let material = if rng.gen_bool(config.primitive_texture_probability) {
            textured_material(&mut rng, pools)
        } else {
            monolithic_material(&mut rng)
        };
        let mesh = cache.get(&shape)?;
        let (transform, bounds) = place(&mut rng, mesh, rotation, scale, &placed, config)?.ok_or_else(|| {
            generation_error(seed, format!("could not place primitive {i} after {} tries", config.retry_limit))
        })?;
        placed.push(bounds);
        primitives.push(SceneObject {
            name: format!("primitive{i}"),
            shape,
            transform,
            material,
        });
    }
    let env = random_env(&mut rng, pools, config);

    let target = scene_centroid(&placed);
    let distance = config.camera_distance.sample(&mut rng);
    let elevation = config.camera_elevation.sample(&mut rng);
    let azimuth = rng.gen_range(0.0..TAU);
    let eye = target + distance * DVec3::new(elevation.cos() * azimuth.sin(), elevation.sin(), elevation.cos() * azimuth.cos());
    let frames = config.frames_per_clip;
    let camera = CameraTrack::static_track(config.vfov.sample(&mut rng), CameraPose::look_at(eye, target), frames);
    let motion = SceneDescription::static_motion(&objects, &primitives, frames);
    Ok(SceneDescription {
        seed,
        ground,
        objects,
        primitives,
        env,
        camera,
        motion,
    })
}

/// Center of the union of body boxes, dropped to half the mean body height.
pub fn scene_centroid(boxes: &[Aabb]) -> DVec3 {
    if boxes.is_empty() {
        return DVec3::ZERO;
    }
    let all = boxes.iter().fold(Aabb::EMPTY, |a, b| a.union(*b));
    let c = all.center();
    let h = boxes.iter().map(|b| b.extent().y).sum::<f64>() / boxes.len() as f64;
    DVec3::new(c.x, 0.5 * h, c.z)
}

pub fn sample_motion_kind(config: &GenConfig, seed: u64) -> MotionKind {
    let mut rng = stream(seed, MOTION_STREAM ^ 1);
    let total: f64 = MotionKind::ANIMATED.iter().map(|k| config.motion_weights.weight(*k)).sum();
    let mut x = rng.gen_range(0.0..total);
    for k in MotionKind::ANIMATED {
        let w = config.motion_weights.weight(k);
        if x < w {
            return k;
        }
        x -= w;
    }
    *MotionKind::ANIMATED.iter().rev().find(|k| config.motion_weights.weight(**k) > 0.0).unwrap()
}

/// Full clip: layout plus a motion type drawn from the configured weights.
/// Deterministic in `(config, seed)`.
pub fn generate_scene(config: &GenConfig, seed: u64) -> Result<SceneDescription> {
    let pools = config.pools()?;
    generate_scene_with(config, &pools, seed, None)
}

/// Like [`generate_scene`] with preloaded pools and an optional forced
/// motion type. When no body can follow an object motion without
/// collisions, the layout is resampled from a derived seed.
pub fn generate_scene_with(config: &GenConfig, pools: &Pools, seed: u64, kind: Option<MotionKind>) -> Result<SceneDescription> {
    let kind = kind.unwrap_or_else(|| sample_motion_kind(config, seed));
    let motion_seed = hash_keys(&[seed, MOTION_STREAM]);
    let mut last = None;
    for attempt in 0..config.retry_limit as u64 {
        let layout_seed = if attempt == 0 { seed } else { hash_keys(&[seed, SCENE_STREAM, attempt]) };
        let mut scene = generate_layout(config, pools, layout_seed)?;
        scene.seed = seed;
        if kind == MotionKind::Static || config.frames_per_clip < 2 {
            return Ok(scene);
        }
        match generate_motion(kind, &scene, config.frames_per_clip, motion_seed, &config.motion) {
            Ok(motion) => {
                apply_motion(&mut scene, motion);
                scene.validate()?;
                return Ok(scene);
            }
            Err(Error::Domain(reason)) if matches!(kind, MotionKind::ObjectRotation | MotionKind::ObjectTranslation) => {
                last = Some(reason);
            }
            Err(e) => return Err(e),
        }
    }
    Err(generation_error(
        seed,
        format!("no collision-free {} track: {}", kind.name(), last.unwrap_or_default()),
    ))
}
