//! Layered pipeline configuration: built-in defaults, then an optional TOML
//! file, then command-line flags.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dr_forge::baselines::{DEFAULT_EDGE_RATIO, DEFAULT_LEVELS};
use dr_forge::compositor::{DEFAULT_EPSILON, DEFAULT_RATIO_MAX};
use dr_forge::dataset_io::digest;
use dr_forge::pathtracer::{RenderSettings, SamplingStrategy};
use dr_forge::scenegen::GenConfig;
use dr_forge::Tonemap;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Base seed of every render. `gen-scenes` starts its seed range here
    /// unless `--seed-base` is given.
    pub seed: u64,
    pub generator: GenConfig,
    pub renderer: RendererConfig,
    pub baselines: BaselineConfig,
    pub compositor: CompositorConfig,
    pub metrics: MetricsConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RendererConfig {
    pub spp: u32,
    pub max_bounces: u32,
    /// Square output resolution.
    pub resolution: usize,
    /// Frames rendered per clip; longer generated clips are truncated.
    pub frames: usize,
    pub tonemap: Tonemap,
    pub firefly_clamp: f64,
    pub strategy: SamplingStrategy,
}

impl Default for RendererConfig {
    fn default() -> Self {
        let s = RenderSettings::default();
        RendererConfig {
            spp: 16,
            max_bounces: s.max_bounces,
            resolution: 128,
            frames: 4,
            tonemap: s.tonemap,
            firefly_clamp: s.firefly_clamp,
            strategy: s.strategy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Depth ratio above which SSRT drops a reconstructed triangle.
    pub edge_ratio: f64,
    /// Prefiltered levels of the split-sum environment.
    pub levels: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            edge_ratio: DEFAULT_EDGE_RATIO,
            levels: DEFAULT_LEVELS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompositorConfig {
    pub epsilon: f64,
    pub ratio_max: f64,
}

impl Default for CompositorConfig {
    fn default() -> Self {
        CompositorConfig {
            epsilon: DEFAULT_EPSILON,
            ratio_max: DEFAULT_RATIO_MAX,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Display transform applied to HDR renders before color metrics.
    pub tonemap: Tonemap,
}

impl PipelineConfig {
    /// Defaults overlaid with the TOML file at `path`, if any.
    pub fn load(path: Option<&Path>) -> Result<PipelineConfig> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// 256 spp, 512², 24 frames.
    pub fn apply_paper_scale(&mut self) {
        self.renderer.spp = 256;
        self.renderer.resolution = 512;
        self.renderer.frames = 24;
    }

    pub fn render_settings(&self) -> RenderSettings {
        let r = &self.renderer;
        RenderSettings {
            spp: r.spp,
            max_bounces: r.max_bounces,
            seed: self.seed,
            tonemap: r.tonemap,
            firefly_clamp: r.firefly_clamp,
            width: r.resolution,
            height: r.resolution,
            strategy: r.strategy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.render_settings().validate()?;
        if self.renderer.frames == 0 {
            bail!("renderer.frames must be at least 1");
        }
        if !(self.baselines.edge_ratio > 1.0) || self.baselines.levels == 0 {
            bail!("baselines.edge_ratio must exceed 1 and baselines.levels must be at least 1");
        }
        if !(self.compositor.epsilon > 0.0) || !(self.compositor.ratio_max >= 1.0) {
            bail!("compositor.epsilon must be positive and compositor.ratio_max at least 1");
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        digest(self)
    }
}
