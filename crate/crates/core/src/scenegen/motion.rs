use std::f64::consts::TAU;
use std::path::Path;

use glam::{DQuat, DVec3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{scene_centroid, Range};
use crate::error::{Error, Result};
use crate::scene::{Aabb, CameraPose, CameraTrack, MotionKind, MotionTracks, SceneDescription, Transform, TriangleMesh};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionParams {
    /// Largest camera displacement of an oscillation, as a fraction of the
    /// camera-to-target distance.
    pub oscillation_fraction: f64,
    /// Oscillation periods per clip.
    pub oscillation_cycles: Range,
    /// Full turns a rotating object makes per clip.
    pub rotation_turns: f64,
    /// Path length of a translating object, meters.
    pub translation_distance: Range,
    /// Candidate paths tried per translating object.
    pub translation_tries: usize,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams {
            oscillation_fraction: 0.05,
            oscillation_cycles: Range::new(0.5, 1.5),
            rotation_turns: 1.0,
            translation_distance: Range::new(0.4, 1.5),
            translation_tries: 64,
        }
    }
}

impl MotionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.oscillation_fraction >= 0.0 && self.oscillation_fraction <= 0.05) {
            return Err(Error::Validation("oscillation_fraction must lie in [0, 0.05]".into()));
        }
        self.oscillation_cycles.validate("oscillation_cycles")?;
        self.translation_distance.validate("translation_distance")?;
        if !self.rotation_turns.is_finite() || self.translation_distance.min < 0.0 || self.translation_tries == 0 {
            return Err(Error::Validation("invalid object motion parameters".into()));
        }
        Ok(())
    }
}

/// Camera and body tracks of one clip.
#[derive(Clone, Debug, PartialEq)]
pub struct Motion {
    pub camera: CameraTrack,
    pub tracks: MotionTracks,
}

pub fn apply_motion(scene: &mut SceneDescription, motion: Motion) {
    scene.camera = motion.camera;
    scene.motion = motion.tracks;
}

pub fn body_meshes(scene: &SceneDescription) -> Result<Vec<TriangleMesh>> {
    scene.bodies().map(|b| b.shape.tessellate(Path::new("."))).collect()
}

/// World boxes of every body at `frame`.
pub fn frame_aabbs(scene: &SceneDescription, meshes: &[TriangleMesh], frame: usize) -> Result<Vec<Aabb>> {
    meshes
        .iter()
        .enumerate()
        .map(|(i, m)| m.aabb(&scene.body_transform(frame, i)?))
        .collect()
}

fn time(i: usize, frames: usize) -> f64 {
    i as f64 / (frames - 1) as f64
}

fn inside_plane(b: &Aabb, half: f64) -> bool {
    b.min.x >= -half && b.max.x <= half && b.min.z >= -half && b.max.z <= half
}

/// Builds the tracks of one motion type for `scene`, starting from its
/// first camera pose and rest transforms.
pub fn generate_motion(
    kind: MotionKind,
    scene: &SceneDescription,
    frames: usize,
    seed: u64,
    params: &MotionParams,
) -> Result<Motion> {
    if kind != MotionKind::Static && frames < 2 {
        return Err(Error::domain(format!("{} needs at least 2 frames", kind.name())));
    }
    if frames == 0 {
        return Err(Error::domain("a clip needs at least one frame"));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pose = scene.camera.pose_at(0)?;
    let vfov = scene.camera.vfov;
    let rest: Vec<Transform> = scene.bodies().map(|b| b.transform).collect();
    let meshes = body_meshes(scene)?;
    let boxes: Vec<Aabb> = meshes.iter().zip(&rest).map(|(m, t)| m.aabb(t)).collect::<Result<_>>()?;
    let centroid = scene_centroid(&boxes);

    let still_camera = CameraTrack::static_track(vfov, pose, frames);
    let still_bodies = vec![rest.clone(); frames];
    let no_yaw = vec![0.0; frames];
    let (camera, body_transforms, env_yaw) = match kind {
        MotionKind::Static => (still_camera, still_bodies, no_yaw),
        MotionKind::Orbit => {
            let offset = pose.position - centroid;
            let poses = (0..frames)
                .map(|i| {
                    let r = DQuat::from_rotation_y(TAU * i as f64 / frames as f64);
                    CameraPose::look_at(centroid + r * offset, centroid)
                })
                .collect();
            (CameraTrack { vfov, poses }, still_bodies, no_yaw)
        }
        MotionKind::Oscillation => {
            let distance = (pose.position - centroid).length();
            // Each axis moves at most 2a, so the displacement norm stays under
            // the configured fraction of the distance.
            let a = params.oscillation_fraction * distance / (2.0 * 3f64.sqrt());
            let axes: Vec<(f64, f64)> = (0..3)
                .map(|_| (params.oscillation_cycles.sample(&mut rng), rng.gen_range(0.0..TAU)))
                .collect();
            let poses = (0..frames)
                .map(|i| {
                    let t = time(i, frames);
                    let d = |k: usize| {
                        let (f, phase) = axes[k];
                        a * ((TAU * f * t + phase).sin() - phase.sin())
                    };
                    CameraPose::look_at(pose.position + DVec3::new(d(0), d(1), d(2)), centroid)
                })
                .collect();
            (CameraTrack { vfov, poses }, still_bodies, no_yaw)
        }
        MotionKind::LightRotation => {
            let yaw = (0..frames).map(|i| TAU * i as f64 / frames as f64).collect();
            (still_camera, still_bodies, yaw)
        }
        MotionKind::ObjectRotation => {
            let bodies = object_rotation(scene, &rest, &meshes, &boxes, frames, params, &mut rng)?;
            (still_camera, bodies, no_yaw)
        }
        MotionKind::ObjectTranslation => {
            let bodies = object_translation(scene, &rest, &boxes, frames, params, &mut rng)?;
            (still_camera, bodies, no_yaw)
        }
    };
    Ok(Motion {
        camera,
        tracks: MotionTracks {
            kind,
            body_transforms,
            env_yaw,
        },
    })
}

/// Spins objects about the vertical axis through their box centers. An
/// object only spins if the square around its swept disk stays clear of
/// every other body's occupied region.
fn object_rotation(
    scene: &SceneDescription,
    rest: &[Transform],
    meshes: &[TriangleMesh],
    boxes: &[Aabb],
    frames: usize,
    params: &MotionParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<Transform>>> {
    if scene.objects.is_empty() {
        return Err(Error::domain("object_rotation needs at least one object"));
    }
    let half = scene.ground.half_extent;
    let mut occupied = boxes.to_vec();
    let mut spins = vec![None; rest.len()];
    for i in 0..scene.objects.len() {
        let c = boxes[i].center();
        let pivot = DVec3::new(c.x, 0.0, c.z);
        let r = meshes[i].horizontal_radius(&rest[i], pivot);
        let swept = Aabb::new(
            DVec3::new(pivot.x - r, boxes[i].min.y, pivot.z - r),
            DVec3::new(pivot.x + r, boxes[i].max.y, pivot.z + r),
        );
        let clear = occupied.iter().enumerate().all(|(j, b)| j == i || !b.overlaps(&swept));
        let direction = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        if clear && inside_plane(&swept, half) {
            occupied[i] = swept;
            spins[i] = Some((pivot, direction * TAU * params.rotation_turns / frames as f64));
        }
    }
    if spins.iter().all(Option::is_none) {
        return Err(Error::domain("no object can rotate without collisions"));
    }
    Ok((0..frames)
        .map(|f| {
            rest.iter()
                .zip(&spins)
                .map(|(t, spin)| match spin {
                    Some((pivot, rate)) => {
                        let q = DQuat::from_rotation_y(rate * f as f64);
                        Transform::new(*pivot + q * (t.translation - *pivot), (q * t.rotation).normalize(), t.scale)
                    }
                    None => *t,
                })
                .collect()
        })
        .collect())
}

/// Slides objects along straight paths on the plane. Each path is chosen
/// so the box swept along it overlaps no other body's occupied region.
fn object_translation(
    scene: &SceneDescription,
    rest: &[Transform],
    boxes: &[Aabb],
    frames: usize,
    params: &MotionParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<Transform>>> {
    if scene.objects.is_empty() {
        return Err(Error::domain("object_translation needs at least one object"));
    }
    let half = scene.ground.half_extent;
    let mut occupied = boxes.to_vec();
    let mut paths = vec![DVec3::ZERO; rest.len()];
    for i in 0..scene.objects.len() {
        for _ in 0..params.translation_tries {
            let angle = rng.gen_range(0.0..TAU);
            let d = params.translation_distance.sample(rng) * DVec3::new(angle.cos(), 0.0, angle.sin());
            let swept = boxes[i].union(boxes[i].translated(d));
            if inside_plane(&swept, half) && occupied.iter().enumerate().all(|(j, b)| j == i || !b.overlaps(&swept)) {
                occupied[i] = swept;
                paths[i] = d;
                break;
            }
        }
    }
    if paths.iter().all(|d| *d == DVec3::ZERO) {
        return Err(Error::domain("no object can translate without collisions"));
    }
    Ok((0..frames)
        .map(|f| {
            let t = time(f, frames);
            rest.iter()
                .zip(&paths)
                .map(|(r, d)| Transform {
                    translation: r.translation + t * *d,
                    ..*r
                })
                .collect()
        })
        .collect())
}
