use std::sync::Arc;

use glam::{DVec2, DVec3};

use super::bvh::Bvh;
use super::camera::Ray;
use crate::error::Result;
use crate::scene::{ResolvedMaterial, ResolvedScene, SurfaceParams, Transform, TriangleMesh};

/// A mesh placed in the world with its material.
#[derive(Clone, Debug)]
pub struct Instance {
    pub mesh: Arc<TriangleMesh>,
    pub transform: Transform,
    pub material: ResolvedMaterial,
}

struct PlacedInstance {
    positions: Vec<DVec3>,
    normals: Vec<DVec3>,
    mesh: Arc<TriangleMesh>,
    material: ResolvedMaterial,
}

/// Everything the tracer needs to know about a surface point.
#[derive(Clone, Copy, Debug)]
pub struct SurfaceHit {
    pub t: f64,
    pub position: DVec3,
    /// Geometric normal, facing the incoming ray.
    pub geometric_normal: DVec3,
    /// Interpolated normal, flipped to the same side as the geometric normal.
    pub shading_normal: DVec3,
    pub uv: DVec2,
    pub params: SurfaceParams,
    pub instance: usize,
}

/// World-space triangles of one frame with an acceleration structure.
pub struct SceneGeometry {
    instances: Vec<PlacedInstance>,
    /// Per BVH primitive: (instance, triangle).
    prim_map: Vec<(u32, u32)>,
    bvh: Bvh,
}

impl SceneGeometry {
    pub fn new(instances: Vec<Instance>) -> SceneGeometry {
        let mut tris = Vec::new();
        let mut prim_map = Vec::new();
        let placed: Vec<PlacedInstance> = instances
            .into_iter()
            .map(|inst| {
                let positions: Vec<DVec3> = inst.mesh.positions.iter().map(|p| inst.transform.apply_point(*p)).collect();
                let normals = inst.mesh.normals.iter().map(|n| inst.transform.apply_normal(*n)).collect();
                PlacedInstance {
                    positions,
                    normals,
                    mesh: inst.mesh,
                    material: inst.material,
                }
            })
            .collect();
        for (i, inst) in placed.iter().enumerate() {
            for (t, idx) in inst.mesh.indices.iter().enumerate() {
                tris.push(idx.map(|v| inst.positions[v as usize]));
                prim_map.push((i as u32, t as u32));
            }
        }
        SceneGeometry {
            bvh: Bvh::build(&tris),
            instances: placed,
            prim_map,
        }
    }

    /// Ground plane plus every body at its transform for `frame`.
    pub fn from_scene(scene: &ResolvedScene, frame: usize) -> Result<SceneGeometry> {
        let desc = &scene.description;
        let mut instances = vec![Instance {
            mesh: scene.ground_mesh.clone(),
            transform: desc.ground.transform(),
            material: scene.ground_material.clone(),
        }];
        for (i, (mesh, material)) in scene.meshes.iter().zip(&scene.materials).enumerate() {
            instances.push(Instance {
                mesh: mesh.clone(),
                transform: desc.body_transform(frame, i)?,
                material: material.clone(),
            });
        }
        Ok(SceneGeometry::new(instances))
    }

    pub fn is_empty(&self) -> bool {
        self.bvh.is_empty()
    }

    pub fn intersect(&self, ray: &Ray, t_max: f64) -> Option<SurfaceHit> {
        let hit = self.bvh.intersect(ray, 0.0, t_max)?;
        let (inst_id, tri) = self.prim_map[hit.prim];
        let inst = &self.instances[inst_id as usize];
        let [i0, i1, i2] = inst.mesh.indices[tri as usize].map(|i| i as usize);
        let b0 = 1.0 - hit.b1 - hit.b2;
        let (p0, p1, p2) = (inst.positions[i0], inst.positions[i1], inst.positions[i2]);
        let mut ng = (p1 - p0).cross(p2 - p0).normalize_or_zero();
        if ng.dot(ray.dir) > 0.0 {
            ng = -ng;
        }
        let mut ns = (b0 * inst.normals[i0] + hit.b1 * inst.normals[i1] + hit.b2 * inst.normals[i2]).normalize_or_zero();
        if ns == DVec3::ZERO {
            ns = ng;
        } else if ns.dot(ng) < 0.0 {
            ns = -ns;
        }
        let uvs = &inst.mesh.uvs;
        let uv = b0 * uvs[i0] + hit.b1 * uvs[i1] + hit.b2 * uvs[i2];
        let params = match &inst.mesh.vertex_materials {
            Some(vm) => {
                let (m0, m1, m2) = (vm[i0], vm[i1], vm[i2]);
                SurfaceParams::new(
                    m0.base_color * b0 + m1.base_color * hit.b1 + m2.base_color * hit.b2,
                    b0 * m0.roughness + hit.b1 * m1.roughness + hit.b2 * m2.roughness,
                    b0 * m0.metallic + hit.b1 * m1.metallic + hit.b2 * m2.metallic,
                )
            }
            None => inst.material.eval(uv),
        };
        Some(SurfaceHit {
            t: hit.t,
            position: ray.at(hit.t),
            geometric_normal: ng,
            shading_normal: ns,
            uv,
            params,
            instance: inst_id as usize,
        })
    }

    pub fn occluded(&self, ray: &Ray, t_max: f64) -> bool {
        self.bvh.occluded(ray, 0.0, t_max)
    }
}

/// Offsets a ray origin off the surface along the geometric normal, on the
/// side `dir` points to.
#[inline]
pub fn spawn_ray(p: DVec3, ng: DVec3, dir: DVec3) -> Ray {
    let eps = 1e-7 * (1.0 + p.abs().max_element());
    let side = if dir.dot(ng) >= 0.0 { ng } else { -ng };
    Ray::new(p + side * eps, dir)
}
