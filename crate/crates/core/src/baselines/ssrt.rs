use std::sync::Arc;

use glam::DVec2;

use super::depth_mesh::extract_depth_mesh;
use crate::error::Result;
use crate::image::Image;
use crate::pathtracer::{render_frame, Camera, GBuffer, Instance, PixelFilter, RenderSettings, SceneGeometry};
use crate::radiometry::{EnvironmentMap, Rgb};
use crate::scene::{ResolvedMaterial, SurfaceParams, Transform};

/// Path-traces the mesh reconstructed from `gbuffer` under `env`. Primary
/// rays pass through pixel centers, where the mesh vertices sit; pixels the
/// G-buffer marks as misses show the environment.
pub fn ssrt_render(
    gbuffer: &GBuffer,
    camera: &Camera,
    env: &EnvironmentMap,
    settings: &RenderSettings,
    edge_ratio_threshold: f64,
    frame: u32,
) -> Result<Image<Rgb>> {
    let depth_mesh = extract_depth_mesh(gbuffer, camera, edge_ratio_threshold)?;
    let instance = Instance {
        mesh: Arc::new(depth_mesh.mesh),
        transform: Transform::new(camera.pose.position, camera.pose.rotation, 1.0),
        material: ResolvedMaterial::constant(SurfaceParams::ZERO),
    };
    let geometry = SceneGeometry::new(vec![instance]);
    let mut img = render_frame(&geometry, camera, env, settings, frame, PixelFilter::Center)?;
    for y in 0..camera.height {
        for x in 0..camera.width {
            if !*gbuffer.hit.get(x, y) {
                let ray = camera.generate_ray(DVec2::new(x as f64 + 0.5, y as f64 + 0.5));
                img.set(x, y, env.lookup(ray.dir));
            }
        }
    }
    Ok(img)
}
