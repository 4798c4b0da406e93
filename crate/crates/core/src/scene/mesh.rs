use std::f64::consts::{PI, TAU};
use std::path::Path;

use glam::{DVec2, DVec3};
use serde::{Deserialize, Serialize};

use super::{Aabb, Transform};
use crate::error::{Error, Result};
use crate::radiometry::Rgb;

/// Material attributes carried per vertex, used by meshes reconstructed from
/// a G-buffer where every vertex has its own base color/roughness/metallic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexMaterial {
    pub base_color: Rgb,
    pub roughness: f64,
    pub metallic: f64,
}

/// Indexed triangle mesh with per-vertex normals and uvs.
#[derive(Clone, Debug, Default)]
pub struct TriangleMesh {
    pub positions: Vec<DVec3>,
    pub normals: Vec<DVec3>,
    pub uvs: Vec<DVec2>,
    pub indices: Vec<[u32; 3]>,
    pub vertex_materials: Option<Vec<VertexMaterial>>,
}

impl TriangleMesh {
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty() || self.indices.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.indices.len()
    }

    /// Smallest box containing every transformed vertex.
    pub fn aabb(&self, transform: &Transform) -> Result<Aabb> {
        if self.positions.is_empty() {
            return Err(Error::domain("cannot bound an empty mesh"));
        }
        Ok(Aabb::from_points(self.positions.iter().map(|p| transform.apply_point(*p))))
    }

    /// Largest distance of a vertex from the local Y axis through `pivot`,
    /// after scaling. Bounds the footprint of the mesh under any yaw.
    pub fn horizontal_radius(&self, transform: &Transform, pivot: DVec3) -> f64 {
        self.positions
            .iter()
            .map(|p| {
                let w = transform.apply_point(*p) - pivot;
                (w.x * w.x + w.z * w.z).sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn check(&self) -> Result<()> {
        if self.normals.len() != self.positions.len() || self.uvs.len() != self.positions.len() {
            return Err(Error::Format("mesh attribute arrays differ in length".into()));
        }
        if let Some(vm) = &self.vertex_materials {
            if vm.len() != self.positions.len() {
                return Err(Error::Format("vertex material array length mismatch".into()));
            }
        }
        let n = self.positions.len() as u32;
        if self.indices.iter().flatten().any(|&i| i >= n) {
            return Err(Error::Format("mesh index out of range".into()));
        }
        if self.normals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("mesh has non-finite normals".into()));
        }
        Ok(())
    }

    /// Area-weighted vertex normals, for meshes that ship without them.
    pub fn recompute_normals(&mut self) {
        let mut acc = vec![DVec3::ZERO; self.positions.len()];
        for t in &self.indices {
            let [a, b, c] = t.map(|i| self.positions[i as usize]);
            let n = (b - a).cross(c - a);
            for &i in t {
                acc[i as usize] += n;
            }
        }
        self.normals = acc
            .into_iter()
            .map(|n| n.try_normalize().unwrap_or(DVec3::Y))
            .collect();
    }

    pub fn load_obj(path: &Path) -> Result<TriangleMesh> {
        let opts = tobj::LoadOptions {
            triangulate: true,
            single_index: true,
            ..Default::default()
        };
        let (models, _) = tobj::load_obj(path, &opts).map_err(|e| Error::Format(format!(
            "{}: {e}",
            path.display()
        )))?;
        let mut mesh = TriangleMesh::default();
        let mut has_normals = true;
        for m in models {
            let base = mesh.positions.len() as u32;
            let m = m.mesh;
            let count = m.positions.len() / 3;
            for i in 0..count {
                mesh.positions.push(DVec3::new(
                    m.positions[3 * i] as f64,
                    m.positions[3 * i + 1] as f64,
                    m.positions[3 * i + 2] as f64,
                ));
                if m.normals.len() == m.positions.len() {
                    mesh.normals.push(
                        DVec3::new(
                            m.normals[3 * i] as f64,
                            m.normals[3 * i + 1] as f64,
                            m.normals[3 * i + 2] as f64,
                        )
                        .try_normalize()
                        .unwrap_or(DVec3::Y),
                    );
                } else {
                    has_normals = false;
                }
                if m.texcoords.len() / 2 == count {
                    mesh.uvs.push(DVec2::new(m.texcoords[2 * i] as f64, m.texcoords[2 * i + 1] as f64));
                } else {
                    mesh.uvs.push(DVec2::ZERO);
                }
            }
            for tri in m.indices.chunks_exact(3) {
                mesh.indices.push([base + tri[0], base + tri[1], base + tri[2]]);
            }
        }
        if mesh.is_empty() {
            return Err(Error::Format(format!("{} contains no triangles", path.display())));
        }
        if !has_normals {
            mesh.recompute_normals();
        }
        mesh.check()?;
        Ok(mesh)
    }
}

/// Built-in meshes standing in for an external asset pool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinMesh {
    Torus,
    Icosphere,
    Cone,
    Capsule,
    Bowl,
}

impl BuiltinMesh {
    pub const ALL: [BuiltinMesh; 5] = [
        BuiltinMesh::Torus,
        BuiltinMesh::Icosphere,
        BuiltinMesh::Cone,
        BuiltinMesh::Capsule,
        BuiltinMesh::Bowl,
    ];

    pub fn tessellate(self) -> TriangleMesh {
        match self {
            BuiltinMesh::Torus => torus(0.35, 0.15, 48, 24),
            BuiltinMesh::Icosphere => icosphere(0.5, 3),
            BuiltinMesh::Cone => lathe(&[(0.0, -0.5), (0.5, -0.5), (0.0, 0.5)], 48),
            BuiltinMesh::Capsule => capsule(0.25, 0.5, 32, 8),
            BuiltinMesh::Bowl => lathe(
                &[(0.0, -0.25), (0.2, -0.25), (0.4, -0.1), (0.5, 0.25), (0.45, 0.25), (0.35, -0.05), (0.0, -0.15)],
                48,
            ),
        }
    }
}

/// Axis-aligned unit cube `[-0.5, 0.5]^3` with flat faces.
pub fn cube() -> TriangleMesh {
    let mut m = TriangleMesh::default();
    let faces = [
        (DVec3::X, DVec3::NEG_Z, DVec3::Y),
        (DVec3::NEG_X, DVec3::Z, DVec3::Y),
        (DVec3::Y, DVec3::X, DVec3::NEG_Z),
        (DVec3::NEG_Y, DVec3::X, DVec3::Z),
        (DVec3::Z, DVec3::X, DVec3::Y),
        (DVec3::NEG_Z, DVec3::NEG_X, DVec3::Y),
    ];
    for (n, u, v) in faces {
        let base = m.positions.len() as u32;
        for (su, sv) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            m.positions.push(0.5 * (n + su * u + sv * v));
            m.normals.push(n);
            m.uvs.push(DVec2::new(0.5 * (su + 1.0), 0.5 * (sv + 1.0)));
        }
        m.indices.push([base, base + 1, base + 2]);
        m.indices.push([base, base + 2, base + 3]);
    }
    m
}

/// UV sphere of the given radius. Segment counts are multiples of four so the
/// tessellation touches the analytic bounding box.
pub fn uv_sphere(radius: f64, segments: u32, rings: u32) -> TriangleMesh {
    let mut m = TriangleMesh::default();
    for j in 0..=rings {
        let v = j as f64 / rings as f64;
        let theta = PI * v;
        for i in 0..=segments {
            let u = i as f64 / segments as f64;
            let phi = TAU * u;
            let n = DVec3::new(theta.sin() * phi.cos(), theta.cos(), -theta.sin() * phi.sin());
            m.positions.push(radius * n);
            m.normals.push(n);
            m.uvs.push(DVec2::new(u, 1.0 - v));
        }
    }
    let stride = segments + 1;
    for j in 0..rings {
        for i in 0..segments {
            let a = j * stride + i;
            let b = a + stride;
            if j != 0 {
                m.indices.push([a, b, a + 1]);
            }
            if j != rings - 1 {
                m.indices.push([a + 1, b, b + 1]);
            }
        }
    }
    m
}

/// Closed cylinder of radius 0.5 and height 1 centered at the origin.
pub fn cylinder(segments: u32) -> TriangleMesh {
    let mut m = TriangleMesh::default();
    let r = 0.5;
    for i in 0..=segments {
        let u = i as f64 / segments as f64;
        let phi = TAU * u;
        let n = DVec3::new(phi.cos(), 0.0, -phi.sin());
        for y in [-0.5, 0.5] {
            m.positions.push(DVec3::new(r * n.x, y, r * n.z));
            m.normals.push(n);
            m.uvs.push(DVec2::new(u, y + 0.5));
        }
    }
    for i in 0..segments {
        let a = 2 * i;
        m.indices.push([a, a + 2, a + 1]);
        m.indices.push([a + 1, a + 2, a + 3]);
    }
    for (y, n) in [(-0.5, DVec3::NEG_Y), (0.5, DVec3::Y)] {
        let center = m.positions.len() as u32;
        m.positions.push(DVec3::new(0.0, y, 0.0));
        m.normals.push(n);
        m.uvs.push(DVec2::splat(0.5));
        for i in 0..=segments {
            let phi = TAU * i as f64 / segments as f64;
            m.positions.push(DVec3::new(r * phi.cos(), y, -r * phi.sin()));
            m.normals.push(n);
            m.uvs.push(DVec2::new(0.5 + 0.5 * phi.cos(), 0.5 + 0.5 * phi.sin()));
        }
        for i in 0..segments {
            let a = center + 1 + i;
            if y > 0.0 {
                m.indices.push([center, a, a + 1]);
            } else {
                m.indices.push([center, a + 1, a]);
            }
        }
    }
    m
}

/// Unit square in the XZ plane facing +Y, uv in `[0, 1]^2`.
pub fn quad() -> TriangleMesh {
    TriangleMesh {
        positions: vec![
            DVec3::new(-0.5, 0.0, 0.5),
            DVec3::new(0.5, 0.0, 0.5),
            DVec3::new(0.5, 0.0, -0.5),
            DVec3::new(-0.5, 0.0, -0.5),
        ],
        normals: vec![DVec3::Y; 4],
        uvs: vec![
            DVec2::new(0.0, 0.0),
            DVec2::new(1.0, 0.0),
            DVec2::new(1.0, 1.0),
            DVec2::new(0.0, 1.0),
        ],
        indices: vec![[0, 1, 2], [0, 2, 3]],
        vertex_materials: None,
    }
}

fn torus(major: f64, minor: f64, segments: u32, sides: u32) -> TriangleMesh {
    let mut m = TriangleMesh::default();
    for i in 0..=segments {
        let u = i as f64 / segments as f64;
        let phi = TAU * u;
        let ring = DVec3::new(phi.cos(), 0.0, -phi.sin());
        for j in 0..=sides {
            let v = j as f64 / sides as f64;
            let psi = TAU * v;
            let n = ring * psi.cos() + DVec3::Y * psi.sin();
            m.positions.push(ring * major + n * minor);
            m.normals.push(n);
            m.uvs.push(DVec2::new(u, v));
        }
    }
    grid_indices(&mut m, segments, sides);
    m
}

fn capsule(radius: f64, length: f64, segments: u32, cap_rings: u32) -> TriangleMesh {
    // Profile: bottom hemisphere, straight body, top hemisphere.
    let mut profile = Vec::new();
    for k in 0..=cap_rings {
        let a = -PI / 2.0 + PI / 2.0 * k as f64 / cap_rings as f64;
        profile.push((radius * a.cos(), -length / 2.0 + radius * a.sin(), DVec2::new(a.cos(), a.sin())));
    }
    for k in 0..=cap_rings {
        let a = PI / 2.0 * k as f64 / cap_rings as f64;
        profile.push((radius * a.cos(), length / 2.0 + radius * a.sin(), DVec2::new(a.cos(), a.sin())));
    }
    let mut m = TriangleMesh::default();
    let rows = profile.len() as u32;
    for i in 0..=segments {
        let u = i as f64 / segments as f64;
        let phi = TAU * u;
        let (c, s) = (phi.cos(), -phi.sin());
        for (k, (r, y, n2)) in profile.iter().enumerate() {
            m.positions.push(DVec3::new(r * c, *y, r * s));
            m.normals.push(DVec3::new(n2.x * c, n2.y, n2.x * s).normalize());
            m.uvs.push(DVec2::new(u, k as f64 / (rows - 1) as f64));
        }
    }
    let scale = 1.0 / (length + 2.0 * radius);
    for p in &mut m.positions {
        *p *= scale;
    }
    grid_indices(&mut m, segments, rows - 1);
    m
}

/// Surface of revolution of a polyline `(radius, y)` around +Y.
fn lathe(profile: &[(f64, f64)], segments: u32) -> TriangleMesh {
    let mut m = TriangleMesh::default();
    let rows = profile.len() as u32;
    for i in 0..=segments {
        let u = i as f64 / segments as f64;
        let phi = TAU * u;
        let (c, s) = (phi.cos(), -phi.sin());
        for (k, &(r, y)) in profile.iter().enumerate() {
            m.positions.push(DVec3::new(r * c, y, r * s));
            m.uvs.push(DVec2::new(u, k as f64 / (rows - 1) as f64));
        }
    }
    grid_indices(&mut m, segments, rows - 1);
    m.recompute_normals();
    m
}

fn grid_indices(m: &mut TriangleMesh, segments: u32, sides: u32) {
    let stride = sides + 1;
    for i in 0..segments {
        for j in 0..sides {
            let a = i * stride + j;
            let b = a + stride;
            m.indices.push([a, b, a + 1]);
            m.indices.push([a + 1, b, b + 1]);
        }
    }
    m.indices.retain(|t| {
        let [a, b, c] = t.map(|i| m.positions[i as usize]);
        (b - a).cross(c - a).length_squared() > 1e-20
    });
}

fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<DVec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| DVec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache = std::collections::HashMap::new();
        let mut mid = |a: u32, b: u32, verts: &mut Vec<DVec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalize());
                verts.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh {
        uvs: verts
            .iter()
            .map(|n| DVec2::new(0.5 + n.x.atan2(-n.z) / TAU, n.y.acos() / PI))
            .collect(),
        positions: verts.iter().map(|n| *n * radius).collect(),
        normals: verts,
        indices: faces,
        vertex_materials: None,
    }
}
