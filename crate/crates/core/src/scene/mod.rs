//! Scene model shared by the generator, the path tracer and the baselines.
//!
//! A [`SceneDescription`] is plain serializable data that references meshes,
//! textures and environment maps by path or by procedural parameters.
//! [`SceneDescription::resolve`] loads all of it into a [`ResolvedScene`].

pub mod mesh;
mod resolve;
pub mod texture;

use std::path::{Path, PathBuf};

use glam::{DMat3, DQuat, DVec3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::radiometry::{EnvAugmentation, Rgb, SkyParams};

pub use mesh::{BuiltinMesh, TriangleMesh, VertexMaterial};
pub use resolve::{ResolvedMaterial, ResolvedScene, SurfaceParams};
pub use texture::{ColorSpace, Pattern, ProceduralTexture, Texture, TextureRef};

pub const MAX_OBJECTS: usize = 3;
pub const MAX_PRIMITIVES: usize = 3;

/// Rigid transform with uniform scale: `p -> rotation * (scale * p) + translation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub translation: DVec3,
    pub rotation: DQuat,
    pub scale: f64,
}

impl Default for Transform {
    fn default() -> Self {
        Transform::IDENTITY
    }
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        translation: DVec3::ZERO,
        rotation: DQuat::IDENTITY,
        scale: 1.0,
    };

    pub fn new(translation: DVec3, rotation: DQuat, scale: f64) -> Self {
        Transform {
            translation,
            rotation,
            scale,
        }
    }

    pub fn from_scale(scale: f64) -> Self {
        Transform {
            scale,
            ..Transform::IDENTITY
        }
    }

    pub fn from_translation(translation: DVec3) -> Self {
        Transform {
            translation,
            ..Transform::IDENTITY
        }
    }

    #[inline]
    pub fn apply_point(&self, p: DVec3) -> DVec3 {
        self.rotation * (p * self.scale) + self.translation
    }

    /// Normals transform with the rotation only; uniform scale keeps them
    /// perpendicular.
    #[inline]
    pub fn apply_normal(&self, n: DVec3) -> DVec3 {
        (self.rotation * n).normalize_or_zero()
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: DVec3,
    pub max: DVec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: DVec3::splat(f64::INFINITY),
        max: DVec3::splat(f64::NEG_INFINITY),
    };

    pub fn new(min: DVec3, max: DVec3) -> Self {
        Aabb { min, max }
    }

    pub fn from_points(points: impl IntoIterator<Item = DVec3>) -> Self {
        points.into_iter().fold(Aabb::EMPTY, |b, p| b.grow(p))
    }

    pub fn grow(self, p: DVec3) -> Aabb {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.cmpgt(self.max).any()
    }

    pub fn extent(&self) -> DVec3 {
        self.max - self.min
    }

    pub fn center(&self) -> DVec3 {
        0.5 * (self.min + self.max)
    }

    /// Strict overlap: boxes that merely touch do not collide.
    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.cmplt(o.max).all() && o.min.cmplt(self.max).all()
    }

    pub fn translated(&self, d: DVec3) -> Aabb {
        Aabb {
            min: self.min + d,
            max: self.max + d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// Unit cube `[-0.5, 0.5]^3`.
    Cube,
    /// Sphere of radius 0.5.
    Sphere,
    /// Cylinder of radius 0.5 and height 1 along Y, centered at the origin.
    Cylinder,
    /// Unit quad in the XZ plane facing +Y.
    Quad,
    Builtin { mesh: BuiltinMesh },
    Obj { path: PathBuf },
}

impl Shape {
    pub fn is_primitive(&self) -> bool {
        matches!(self, Shape::Cube | Shape::Sphere | Shape::Cylinder)
    }

    pub fn tessellate(&self, base_dir: &Path) -> Result<TriangleMesh> {
        Ok(match self {
            Shape::Cube => mesh::cube(),
            Shape::Sphere => mesh::uv_sphere(0.5, 64, 32),
            Shape::Cylinder => mesh::cylinder(64),
            Shape::Quad => mesh::quad(),
            Shape::Builtin { mesh } => mesh.tessellate(),
            Shape::Obj { path } => TriangleMesh::load_obj(&base_dir.join(path))?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColorSource {
    Constant { value: Rgb },
    Texture { texture: TextureRef },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarSource {
    Constant {
        value: f64,
    },
    /// Reads one channel (0 = r) of a texture.
    Texture {
        texture: TextureRef,
        #[serde(default)]
        channel: usize,
    },
}

/// Base color / roughness / metallic material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub base_color: ColorSource,
    pub roughness: ScalarSource,
    pub metallic: ScalarSource,
    /// Texture repetitions per mesh uv unit.
    #[serde(default = "one")]
    pub uv_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Material {
    pub fn constant(base_color: Rgb, roughness: f64, metallic: f64) -> Self {
        Material {
            base_color: ColorSource::Constant { value: base_color },
            roughness: ScalarSource::Constant { value: roughness },
            metallic: ScalarSource::Constant { value: metallic },
            uv_scale: 1.0,
        }
    }

    pub fn is_textured(&self) -> bool {
        !matches!(
            (&self.base_color, &self.roughness, &self.metallic),
            (ColorSource::Constant { .. }, ScalarSource::Constant { .. }, ScalarSource::Constant { .. })
        )
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if let ColorSource::Constant { value } = &self.base_color {
            if !(unit(value.r) && unit(value.g) && unit(value.b)) {
                return Err(Error::Validation(format!("base color {value:?} outside [0,1]")));
            }
        }
        for (name, s) in [("roughness", &self.roughness), ("metallic", &self.metallic)] {
            match s {
                ScalarSource::Constant { value } if !unit(*value) => {
                    return Err(Error::Validation(format!("{name} {value} outside [0,1]")));
                }
                ScalarSource::Texture { channel, .. } if *channel > 2 => {
                    return Err(Error::Validation(format!("{name} texture channel {channel} > 2")));
                }
                _ => {}
            }
        }
        if !(self.uv_scale.is_finite() && self.uv_scale > 0.0) {
            return Err(Error::Validation("uv_scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub name: String,
    pub shape: Shape,
    /// Rest transform; motion tracks override it per frame.
    pub transform: Transform,
    pub material: Material,
}

/// Camera placement. `rotation` maps camera space (looking down -Z, +Y up)
/// to world space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: DVec3,
    pub rotation: DQuat,
}

impl CameraPose {
    pub fn look_at(eye: DVec3, target: DVec3) -> Self {
        CameraPose {
            position: eye,
            rotation: crate::math::look_at(eye, target, DVec3::Y),
        }
    }

    pub fn camera_to_world(&self) -> DMat3 {
        DMat3::from_quat(self.rotation)
    }

    pub fn world_to_camera(&self) -> DMat3 {
        DMat3::from_quat(self.rotation.conjugate())
    }

    pub fn forward(&self) -> DVec3 {
        self.rotation * DVec3::NEG_Z
    }

    pub fn to_camera_point(&self, p: DVec3) -> DVec3 {
        self.rotation.conjugate() * (p - self.position)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraTrack {
    /// Vertical field of view in radians.
    pub vfov: f64,
    pub poses: Vec<CameraPose>,
}

impl CameraTrack {
    pub fn static_track(vfov: f64, pose: CameraPose, frames: usize) -> Self {
        CameraTrack {
            vfov,
            poses: vec![pose; frames],
        }
    }

    pub fn frame_count(&self) -> usize {
        self.poses.len()
    }

    pub fn pose_at(&self, frame: usize) -> Result<CameraPose> {
        self.poses.get(frame).copied().ok_or(Error::Index {
            index: frame,
            len: self.poses.len(),
        })
    }
}

/// Square ground plane at `y = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundPlane {
    pub half_extent: f64,
    pub material: Material,
}

impl GroundPlane {
    pub fn transform(&self) -> Transform {
        Transform::from_scale(2.0 * self.half_extent)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EnvSource {
    Sky(SkyParams),
    /// Linear equirect EXR (or PNG, decoded as sRGB).
    File { path: PathBuf },
    Uniform { radiance: Rgb, height: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub source: EnvSource,
    #[serde(default)]
    pub augmentation: EnvAugmentation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    Static,
    Orbit,
    Oscillation,
    LightRotation,
    ObjectRotation,
    ObjectTranslation,
}

impl MotionKind {
    pub const ANIMATED: [MotionKind; 5] = [
        MotionKind::Orbit,
        MotionKind::Oscillation,
        MotionKind::LightRotation,
        MotionKind::ObjectRotation,
        MotionKind::ObjectTranslation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotionKind::Static => "static",
            MotionKind::Orbit => "orbit",
            MotionKind::Oscillation => "oscillation",
            MotionKind::LightRotation => "light_rotation",
            MotionKind::ObjectRotation => "object_rotation",
            MotionKind::ObjectTranslation => "object_translation",
        }
    }
}

impl std::str::FromStr for MotionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [MotionKind::Static]
            .into_iter()
            .chain(MotionKind::ANIMATED)
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown motion kind {s:?}")))
    }
}

/// Per-frame body transforms and environment yaw. Bodies are indexed as
/// `objects` followed by `primitives`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionTracks {
    pub kind: MotionKind,
    /// `body_transforms[frame][body]`.
    pub body_transforms: Vec<Vec<Transform>>,
    /// Extra environment yaw per frame, radians, on top of the base augmentation.
    pub env_yaw: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub seed: u64,
    pub ground: GroundPlane,
    pub objects: Vec<SceneObject>,
    pub primitives: Vec<SceneObject>,
    pub env: EnvSpec,
    pub camera: CameraTrack,
    pub motion: MotionTracks,
}

impl SceneDescription {
    pub fn frame_count(&self) -> usize {
        self.camera.frame_count()
    }

    pub fn bodies(&self) -> impl Iterator<Item = &SceneObject> {
        self.objects.iter().chain(self.primitives.iter())
    }

    pub fn body_count(&self) -> usize {
        self.objects.len() + self.primitives.len()
    }

    pub fn body_transform(&self, frame: usize, body: usize) -> Result<Transform> {
        let row = self.motion.body_transforms.get(frame).ok_or(Error::Index {
            index: frame,
            len: self.motion.body_transforms.len(),
        })?;
        row.get(body).copied().ok_or(Error::Index {
            index: body,
            len: row.len(),
        })
    }

    pub fn env_yaw(&self, frame: usize) -> Result<f64> {
        self.motion.env_yaw.get(frame).copied().ok_or(Error::Index {
            index: frame,
            len: self.motion.env_yaw.len(),
        })
    }

    /// Motion tracks that hold every body at its rest transform.
    pub fn static_motion(objects: &[SceneObject], primitives: &[SceneObject], frames: usize) -> MotionTracks {
        let rest: Vec<Transform> = objects.iter().chain(primitives).map(|o| o.transform).collect();
        MotionTracks {
            kind: MotionKind::Static,
            body_transforms: vec![rest; frames],
            env_yaw: vec![0.0; frames],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.frame_count();
        if f == 0 {
            return Err(Error::Validation("camera track has no frames".into()));
        }
        if self.objects.len() > MAX_OBJECTS || self.primitives.len() > MAX_PRIMITIVES {
            return Err(Error::Validation(format!(
                "{} objects / {} primitives exceed the limits",
                self.objects.len(),
                self.primitives.len()
            )));
        }
        if let Some(p) = self.primitives.iter().find(|p| !p.shape.is_primitive()) {
            return Err(Error::Validation(format!("primitive {} is not a cube/sphere/cylinder", p.name)));
        }
        if !(self.camera.vfov > 0.0 && self.camera.vfov < std::f64::consts::PI) {
            return Err(Error::Validation(format!("vfov {} out of range", self.camera.vfov)));
        }
        for (i, pose) in self.camera.poses.iter().enumerate() {
            if (pose.rotation.length() - 1.0).abs() > 1e-6 || !pose.position.is_finite() {
                return Err(Error::Validation(format!("camera pose {i} is not a rigid transform")));
            }
        }
        if !(self.ground.half_extent > 0.0) {
            return Err(Error::Validation("ground plane must have positive extent".into()));
        }
        self.ground.material.validate()?;
        for o in self.bodies() {
            o.material.validate()?;
        }
        if self.motion.body_transforms.len() != f || self.motion.env_yaw.len() != f {
            return Err(Error::Validation(format!("motion tracks do not cover {f} frames")));
        }
        let n = self.body_count();
        for (i, row) in self.motion.body_transforms.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Validation(format!("frame {i} has {} body transforms, expected {n}", row.len())));
            }
        }
        for t in self.bodies().map(|o| &o.transform).chain(self.motion.body_transforms.iter().flatten()) {
            if !(t.scale > 0.0 && t.scale.is_finite()) || (t.rotation.length() - 1.0).abs() > 1e-6 {
                return Err(Error::Validation("body transform must have scale > 0 and a unit rotation".into()));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<SceneDescription> {
        let scene: SceneDescription = io::read_json(path)?;
        scene.validate()?;
        Ok(scene)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(shape: Shape, transform: Transform) -> Result<Aabb> {
        shape.tessellate(Path::new("."))?.aabb(&transform)
    }

    fn close(a: DVec3, b: DVec3) -> bool {
        (a - b).abs().max_element() < 1e-9
    }

    #[test]
    fn aabb_examples() {
        let b = unit(Shape::Cube, Transform::IDENTITY).unwrap();
        assert!(close(b.min, DVec3::splat(-0.5)) && close(b.max, DVec3::splat(0.5)));
        let b = unit(Shape::Cube, Transform::from_scale(2.0)).unwrap();
        assert!(close(b.min, DVec3::splat(-1.0)) && close(b.max, DVec3::splat(1.0)));
        // Radius 1 sphere (unit sphere mesh has radius 0.5) centered at (3,0,0).
        let b = unit(Shape::Sphere, Transform::new(DVec3::new(3.0, 0.0, 0.0), DQuat::IDENTITY, 2.0)).unwrap();
        assert!(close(b.min, DVec3::new(2.0, -1.0, -1.0)) && close(b.max, DVec3::new(4.0, 1.0, 1.0)));
    }

    #[test]
    fn touching_boxes_do_not_overlap() {
        let a = Aabb::new(DVec3::ZERO, DVec3::ONE);
        let b = a.translated(DVec3::X);
        assert!(!a.overlaps(&b));
        assert!(a.overlaps(&a.translated(DVec3::splat(0.5))));
    }

    fn orbit_track(frames: usize) -> CameraTrack {
        CameraTrack {
            vfov: 0.8,
            poses: (0..frames)
                .map(|i| {
                    let phi = 2.0 * PI * i as f64 / frames as f64;
                    CameraPose::look_at(DVec3::new(4.0 * phi.sin(), 1.0, 4.0 * phi.cos()), DVec3::ZERO)
                })
                .collect(),
        }
    }

    #[test]
    fn pose_at_bounds_and_orbit_half_turn() {
        let track = orbit_track(24);
        let p0 = track.pose_at(0).unwrap();
        let p12 = track.pose_at(12).unwrap();
        assert!(close(p12.position, DVec3::new(-p0.position.x, p0.position.y, -p0.position.z)));
        let half = DQuat::from_rotation_y(PI);
        assert!(close(half * p0.forward(), p12.forward()));
        assert!(matches!(track.pose_at(24), Err(Error::Index { index: 24, len: 24 })));
    }

    pub(crate) fn sample_scene() -> SceneDescription {
        let objects = vec![SceneObject {
            name: "torus".into(),
            shape: Shape::Builtin { mesh: BuiltinMesh::Torus },
            transform: Transform::new(DVec3::new(0.1, 0.15, -0.2), DQuat::from_rotation_y(0.3), 1.1),
            material: Material {
                base_color: ColorSource::Texture {
                    texture: TextureRef::Procedural(ProceduralTexture {
                        pattern: Pattern::Noise,
                        color_a: Rgb::new(0.1, 0.2, 0.3),
                        color_b: Rgb::new(0.7, 0.6, 0.5),
                        frequency: 3,
                        seed: 42,
                        resolution: 16,
                    }),
                },
                roughness: ScalarSource::Constant { value: 0.1 + 0.2 },
                metallic: ScalarSource::Constant { value: 1.0 / 3.0 },
                uv_scale: 2.0,
            },
        }];
        let primitives = vec![SceneObject {
            name: "cube".into(),
            shape: Shape::Cube,
            transform: Transform::new(DVec3::new(1.0, 0.5, 0.0), DQuat::IDENTITY, 1.0),
            material: Material::constant(Rgb::new(0.3, 0.4, 0.5), 0.7, 0.0),
        }];
        let frames = 3;
        SceneDescription {
            seed: 7,
            ground: GroundPlane {
                half_extent: 5.0,
                material: Material::constant(Rgb::splat(0.5), 0.9, 0.0),
            },
            motion: SceneDescription::static_motion(&objects, &primitives, frames),
            objects,
            primitives,
            env: EnvSpec {
                source: EnvSource::Uniform {
                    radiance: Rgb::splat(1.0),
                    height: 8,
                },
                augmentation: EnvAugmentation {
                    yaw: 0.123456789,
                    flip: true,
                    scale: 1.7,
                },
            },
            camera: orbit_track(frames),
        }
    }

    #[test]
    fn json_round_trip_is_value_identical() {
        let scene = sample_scene();
        scene.validate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        scene.save(&path).unwrap();
        assert_eq!(SceneDescription::load(&path).unwrap(), scene);
    }

    #[test]
    fn validation_rejects_bad_material_and_short_tracks() {
        let mut s = sample_scene();
        s.primitives[0].material = Material::constant(Rgb::splat(1.2), 0.5, 0.0);
        assert!(s.validate().is_err());
        let mut s = sample_scene();
        s.motion.env_yaw.pop();
        assert!(s.validate().is_err());
    }

    #[test]
    fn motion_kind_names_parse() {
        for k in MotionKind::ANIMATED {
            assert_eq!(k.name().parse::<MotionKind>().unwrap(), k);
        }
        assert!("spin".parse::<MotionKind>().is_err());
    }
}
