use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use glam::DVec2;

use super::{ColorSource, EnvSource, Material, ScalarSource, SceneDescription, Texture, TextureRef, TriangleMesh};
use crate::error::Result;
use crate::io;
use crate::radiometry::{augment_env, EnvironmentMap, Rgb};

/// Material channels at one surface point, all in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceParams {
    pub base_color: Rgb,
    pub roughness: f64,
    pub metallic: f64,
}

impl SurfaceParams {
    pub const ZERO: SurfaceParams = SurfaceParams {
        base_color: Rgb::BLACK,
        roughness: 0.0,
        metallic: 0.0,
    };

    pub fn new(base_color: Rgb, roughness: f64, metallic: f64) -> Self {
        SurfaceParams {
            base_color: base_color.map(|c| c.clamp(0.0, 1.0)),
            roughness: roughness.clamp(0.0, 1.0),
            metallic: metallic.clamp(0.0, 1.0),
        }
    }
}

#[derive(Clone, Debug)]
enum ColorChannel {
    Constant(Rgb),
    Texture(Arc<Texture>),
}

#[derive(Clone, Debug)]
enum ScalarChannel {
    Constant(f64),
    Texture(Arc<Texture>, usize),
}

/// A [`Material`] with its textures loaded.
#[derive(Clone, Debug)]
pub struct ResolvedMaterial {
    base_color: ColorChannel,
    roughness: ScalarChannel,
    metallic: ScalarChannel,
    uv_scale: f64,
}

impl ResolvedMaterial {
    pub fn constant(p: SurfaceParams) -> Self {
        ResolvedMaterial {
            base_color: ColorChannel::Constant(p.base_color),
            roughness: ScalarChannel::Constant(p.roughness),
            metallic: ScalarChannel::Constant(p.metallic),
            uv_scale: 1.0,
        }
    }

    fn load(m: &Material, base_dir: &Path, cache: &mut TextureCache) -> Result<Self> {
        Ok(ResolvedMaterial {
            base_color: match &m.base_color {
                ColorSource::Constant { value } => ColorChannel::Constant(*value),
                ColorSource::Texture { texture } => ColorChannel::Texture(cache.get(texture, base_dir)?),
            },
            roughness: scalar(&m.roughness, base_dir, cache)?,
            metallic: scalar(&m.metallic, base_dir, cache)?,
            uv_scale: m.uv_scale,
        })
    }

    /// Evaluates every channel at a mesh uv; results are clamped to `[0, 1]`.
    pub fn eval(&self, uv: DVec2) -> SurfaceParams {
        let uv = uv * self.uv_scale;
        let base_color = match &self.base_color {
            ColorChannel::Constant(c) => *c,
            ColorChannel::Texture(t) => t.sample(uv),
        };
        let s = |c: &ScalarChannel| match c {
            ScalarChannel::Constant(v) => *v,
            ScalarChannel::Texture(t, ch) => t.sample(uv).channel(*ch),
        };
        SurfaceParams::new(base_color, s(&self.roughness), s(&self.metallic))
    }
}

fn scalar(s: &ScalarSource, base_dir: &Path, cache: &mut TextureCache) -> Result<ScalarChannel> {
    Ok(match s {
        ScalarSource::Constant { value } => ScalarChannel::Constant(*value),
        ScalarSource::Texture { texture, channel } => ScalarChannel::Texture(cache.get(texture, base_dir)?, *channel),
    })
}

#[derive(Default)]
struct TextureCache {
    loaded: HashMap<String, Arc<Texture>>,
}

impl TextureCache {
    fn get(&mut self, r: &TextureRef, base_dir: &Path) -> Result<Arc<Texture>> {
        // Debug formatting is a stable, exact key for both file and procedural refs.
        let key = format!("{r:?}");
        if let Some(t) = self.loaded.get(&key) {
            return Ok(t.clone());
        }
        let t = Arc::new(Texture::load(r, base_dir)?);
        self.loaded.insert(key, t.clone());
        Ok(t)
    }
}

/// A scene with meshes, textures and the environment loaded into memory.
#[derive(Clone, Debug)]
pub struct ResolvedScene {
    pub description: SceneDescription,
    pub ground_mesh: Arc<TriangleMesh>,
    pub ground_material: ResolvedMaterial,
    /// Local-space meshes, one per body (objects then primitives).
    pub meshes: Vec<Arc<TriangleMesh>>,
    pub materials: Vec<ResolvedMaterial>,
    /// Environment after the base augmentation.
    pub env: EnvironmentMap,
}

impl SceneDescription {
    /// Loads every referenced asset. Relative paths are resolved against `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<ResolvedScene> {
        self.validate()?;
        let mut cache = TextureCache::default();
        let mut meshes = Vec::with_capacity(self.body_count());
        let mut materials = Vec::with_capacity(self.body_count());
        for body in self.bodies() {
            meshes.push(Arc::new(body.shape.tessellate(base_dir)?));
            materials.push(ResolvedMaterial::load(&body.material, base_dir, &mut cache)?);
        }
        let source = match &self.env.source {
            EnvSource::Sky(sky) => sky.render()?,
            EnvSource::File { path } => io::read_env(&base_dir.join(path))?,
            EnvSource::Uniform { radiance, height } => EnvironmentMap::uniform(*height, *radiance)?,
        };
        Ok(ResolvedScene {
            ground_mesh: Arc::new(super::Shape::Quad.tessellate(base_dir)?),
            ground_material: ResolvedMaterial::load(&self.ground.material, base_dir, &mut cache)?,
            meshes,
            materials,
            env: self.env.augmentation.apply(&source)?,
            description: self.clone(),
        })
    }
}

impl ResolvedScene {
    pub fn frame_count(&self) -> usize {
        self.description.frame_count()
    }

    /// Environment lighting at `frame`, including the per-frame yaw of a
    /// light-rotation track.
    pub fn frame_env(&self, frame: usize) -> Result<EnvironmentMap> {
        let yaw = self.description.env_yaw(frame)?;
        if yaw == 0.0 {
            Ok(self.env.clone())
        } else {
            augment_env(&self.env, yaw, false, 1.0)
        }
    }
}
