//! Classical forward-rendering baselines that relight a G-buffer without the
//! original scene geometry.

pub mod depth_mesh;
pub mod splitsum;
pub mod ssrt;

pub use depth_mesh::{extract_depth_mesh, DepthMesh, DEFAULT_EDGE_RATIO};
pub use splitsum::{prefilter_env, shade_point, splitsum_shade, PrefilteredEnv, DEFAULT_LEVELS};
pub use ssrt::ssrt_render;
