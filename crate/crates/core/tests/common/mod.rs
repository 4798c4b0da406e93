#![allow(dead_code)]

pub mod oracles;

use std::sync::Arc;

use dr_forge::pathtracer::{Camera, Instance};
use dr_forge::scene::{mesh, CameraPose, ResolvedMaterial, SurfaceParams, Transform};
use dr_forge::Rgb;
use glam::{DQuat, DVec3};

pub fn constant(base: f64, roughness: f64, metallic: f64) -> ResolvedMaterial {
    ResolvedMaterial::constant(SurfaceParams::new(Rgb::splat(base), roughness, metallic))
}

/// Unit-radius sphere at the origin.
pub fn sphere(material: ResolvedMaterial) -> Instance {
    Instance {
        mesh: Arc::new(mesh::uv_sphere(1.0, 128, 64)),
        transform: Transform::IDENTITY,
        material,
    }
}

/// Square of side `size` in the XY plane at depth `z`, facing +Z.
pub fn wall(size: f64, z: f64, material: ResolvedMaterial) -> Instance {
    Instance {
        mesh: Arc::new(mesh::quad()),
        transform: Transform::new(DVec3::new(0.0, 0.0, z), DQuat::from_rotation_x(std::f64::consts::FRAC_PI_2), size),
        material,
    }
}

/// Camera on +Z looking at the origin.
pub fn front_camera(distance: f64, vfov: f64, res: usize) -> Camera {
    Camera::new(CameraPose::look_at(DVec3::new(0.0, 0.0, distance), DVec3::ZERO), vfov, res, res)
}
