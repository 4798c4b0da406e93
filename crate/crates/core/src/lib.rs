//! Physically based rendering data factory: procedural scene synthesis,
//! path-traced clips with G-buffers and lighting encodings, classical
//! forward-rendering baselines, shading-ratio compositing and the metric
//! protocol used to score all of it.

pub mod baselines;
pub mod compositor;
pub mod dataset_io;
pub mod error;
pub mod image;
pub mod io;
pub mod math;
pub mod metrics;
pub mod pathtracer;
pub mod radiometry;
pub mod scene;
pub mod scenegen;

pub use error::{Error, Result};
pub use image::Image;
pub use radiometry::{EnvironmentMap, LightingEncoding, Rgb, Tonemap};
pub use scene::{Material, ResolvedScene, SceneDescription};
