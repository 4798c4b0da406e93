use glam::{DVec2, DVec3};

use crate::error::{Error, Result};
use crate::pathtracer::{Camera, GBuffer};
use crate::scene::{TriangleMesh, VertexMaterial};

pub const DEFAULT_EDGE_RATIO: f64 = 1.2;

/// Triangle mesh reconstructed from a G-buffer, in camera space.
#[derive(Clone, Debug)]
pub struct DepthMesh {
    pub mesh: TriangleMesh,
    /// Grid pixel of every vertex.
    pub pixels: Vec<(usize, usize)>,
    /// Triangles rejected for spanning a depth discontinuity.
    pub dropped: usize,
}

impl DepthMesh {
    pub fn triangle_count(&self) -> usize {
        self.mesh.indices.len()
    }
}

/// Unprojects every hit pixel center and connects neighbors on the pixel
/// grid. A triangle is kept only if the ratio of its largest to smallest
/// view depth is at most `edge_ratio_threshold`.
pub fn extract_depth_mesh(gbuffer: &GBuffer, camera: &Camera, edge_ratio_threshold: f64) -> Result<DepthMesh> {
    let (w, h) = (gbuffer.width(), gbuffer.height());
    if (camera.width, camera.height) != (w, h) {
        return Err(Error::domain(format!(
            "camera is {}x{} but the G-buffer is {w}x{h}",
            camera.width, camera.height
        )));
    }
    let range = gbuffer.depth_range;
    if !(range.z_min.is_finite() && range.z_max.is_finite() && range.z_min >= 0.0 && range.z_max >= range.z_min) {
        return Err(Error::Format(format!("invalid depth range {range:?}")));
    }
    if !(edge_ratio_threshold >= 1.0) {
        return Err(Error::domain("edge ratio threshold must be at least 1"));
    }
    let mut mesh = TriangleMesh {
        vertex_materials: Some(Vec::new()),
        ..TriangleMesh::default()
    };
    let mut pixels = Vec::new();
    let mut index = vec![u32::MAX; w * h];
    let mut depth = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            if !*gbuffer.hit.get(x, y) {
                continue;
            }
            let z = gbuffer.view_depth(x, y);
            if !(z > 0.0) {
                continue;
            }
            index[y * w + x] = mesh.positions.len() as u32;
            depth[y * w + x] = z;
            let px = DVec2::new(x as f64 + 0.5, y as f64 + 0.5);
            mesh.positions.push(camera.unproject(px, z));
            let n = *gbuffer.normal.get(x, y);
            mesh.normals.push(n.try_normalize().unwrap_or(DVec3::Z));
            mesh.uvs.push(DVec2::ZERO);
            mesh.vertex_materials.as_mut().unwrap().push(VertexMaterial {
                base_color: *gbuffer.base_color.get(x, y),
                roughness: *gbuffer.roughness.get(x, y),
                metallic: *gbuffer.metallic.get(x, y),
            });
            pixels.push((x, y));
        }
    }
    let mut dropped = 0;
    for y in 0..h.saturating_sub(1) {
        for x in 0..w.saturating_sub(1) {
            let a = y * w + x;
            let b = a + 1;
            let c = a + w;
            let d = c + 1;
            for tri in [[a, c, b], [b, c, d]] {
                if tri.iter().any(|&i| index[i] == u32::MAX) {
                    continue;
                }
                let zs = tri.map(|i| depth[i]);
                let lo = zs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = zs.iter().copied().fold(0.0, f64::max);
                if hi > edge_ratio_threshold * lo {
                    dropped += 1;
                    continue;
                }
                mesh.indices.push(tri.map(|i| index[i]));
            }
        }
    }
    Ok(DepthMesh { mesh, pixels, dropped })
}
