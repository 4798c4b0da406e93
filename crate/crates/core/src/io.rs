//! File formats: float EXR with named channels, 8-bit sRGB PNG, JSON, and
//! the temp-file + rename discipline every writer goes through.

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use exr::prelude as ex;
use exr::prelude::{ReadChannels, ReadLayers, WritableImage};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::radiometry::{srgb_encode, EnvironmentMap, Rgb};

/// Writes `bytes` to a sibling temp file, fsyncs and renames over `path`, so
/// readers never observe a partially written artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// One named float channel of an EXR layer, row-major from the top-left.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub name: String,
    pub samples: Vec<f32>,
}

impl Channel {
    pub fn new(name: impl Into<String>, samples: Vec<f32>) -> Self {
        Channel {
            name: name.into(),
            samples,
        }
    }
}

/// A named group of channels sharing one resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub name: Option<String>,
    pub width: usize,
    pub height: usize,
    pub channels: Vec<Channel>,
}

impl Layer {
    pub fn channel(&self, name: &str) -> Option<&[f32]> {
        self.channels
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.samples.as_slice())
    }

    pub fn require(&self, name: &str, path: &Path) -> Result<&[f32]> {
        self.channel(name).ok_or_else(|| Error::Exr {
            path: path.to_path_buf(),
            message: format!("missing channel {name}"),
        })
    }
}

fn exr_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Exr {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn to_exr_layer(layer: &Layer, path: &Path) -> Result<ex::Layer<ex::AnyChannels<ex::FlatSamples>>> {
    let mut list: ex::SmallVec<[ex::AnyChannel<ex::FlatSamples>; 4]> = ex::SmallVec::new();
    for c in &layer.channels {
        if c.samples.len() != layer.width * layer.height {
            return Err(exr_err(path, format!("channel {} has wrong sample count", c.name)));
        }
        list.push(ex::AnyChannel::new(
            c.name.as_str(),
            ex::FlatSamples::F32(c.samples.clone()),
        ));
    }
    let attributes = match &layer.name {
        Some(n) => ex::LayerAttributes::named(n.as_str()),
        None => ex::LayerAttributes::default(),
    };
    Ok(ex::Layer::new(
        (layer.width, layer.height),
        attributes,
        ex::Encoding::SMALL_LOSSLESS,
        ex::AnyChannels::sort(list),
    ))
}

/// Writes one or more layers (parts) of float channels.
pub fn write_exr(path: &Path, layers: &[Layer]) -> Result<()> {
    if layers.is_empty() {
        return Err(exr_err(path, "no layers to write"));
    }
    let exr_layers = layers
        .iter()
        .map(|l| to_exr_layer(l, path))
        .collect::<Result<Vec<_>>>()?;
    let w = layers.iter().map(|l| l.width).max().unwrap_or(1);
    let h = layers.iter().map(|l| l.height).max().unwrap_or(1);
    let attrs = ex::ImageAttributes::new(ex::IntegerBounds::from_dimensions((w, h)));
    let image = ex::Image::from_layers(attrs, exr_layers);
    let mut buf = Cursor::new(Vec::new());
    image.write().to_buffered(&mut buf).map_err(|e| exr_err(path, e))?;
    atomic_write(path, buf.get_ref())
}

pub fn read_exr(path: &Path) -> Result<Vec<Layer>> {
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let image = ex::read()
        .no_deep_data()
        .largest_resolution_level()
        .all_channels()
        .all_layers()
        .all_attributes()
        .from_file(path)
        .map_err(|e| exr_err(path, e))?;
    Ok(image
        .layer_data
        .into_iter()
        .map(|layer| Layer {
            name: layer.attributes.layer_name.map(|t| t.to_string()),
            width: layer.size.width(),
            height: layer.size.height(),
            channels: layer
                .channel_data
                .list
                .into_iter()
                .map(|c| Channel {
                    name: c.name.to_string(),
                    samples: match c.sample_data {
                        ex::FlatSamples::F32(v) => v,
                        ex::FlatSamples::F16(v) => v.into_iter().map(|s| s.to_f32()).collect(),
                        ex::FlatSamples::U32(v) => v.into_iter().map(|s| s as f32).collect(),
                    },
                })
                .collect(),
        })
        .collect())
}

pub fn read_exr_single(path: &Path) -> Result<Layer> {
    read_exr(path)?
        .into_iter()
        .next()
        .ok_or_else(|| exr_err(path, "file has no layers"))
}

/// Channel names of an RGB image under `prefix`, e.g. `basecolor.{r,g,b}`.
pub fn rgb_channel_names(prefix: Option<&str>) -> [String; 3] {
    match prefix {
        Some(p) => [format!("{p}.r"), format!("{p}.g"), format!("{p}.b")],
        None => ["R".into(), "G".into(), "B".into()],
    }
}

pub fn rgb_layer(img: &Image<Rgb>, prefix: Option<&str>) -> Layer {
    let names = rgb_channel_names(prefix);
    Layer {
        name: None,
        width: img.width(),
        height: img.height(),
        channels: (0..3)
            .map(|c| Channel::new(names[c].clone(), img.pixels().iter().map(|p| p.channel(c) as f32).collect()))
            .collect(),
    }
}

pub fn write_rgb_exr(path: &Path, img: &Image<Rgb>, prefix: Option<&str>) -> Result<()> {
    write_exr(path, &[rgb_layer(img, prefix)])
}

pub fn layer_to_rgb(layer: &Layer, prefix: Option<&str>, path: &Path) -> Result<Image<Rgb>> {
    let names = rgb_channel_names(prefix);
    let r = layer.require(&names[0], path)?;
    let g = layer.require(&names[1], path)?;
    let b = layer.require(&names[2], path)?;
    let px = (0..layer.width * layer.height)
        .map(|i| Rgb::new(r[i] as f64, g[i] as f64, b[i] as f64))
        .collect();
    Image::from_vec(layer.width, layer.height, px)
}

pub fn read_rgb_exr(path: &Path, prefix: Option<&str>) -> Result<Image<Rgb>> {
    let layer = read_exr_single(path)?;
    layer_to_rgb(&layer, prefix, path)
}

pub fn write_scalar_exr(path: &Path, img: &Image<f64>, channel: &str) -> Result<()> {
    write_exr(
        path,
        &[Layer {
            name: None,
            width: img.width(),
            height: img.height(),
            channels: vec![Channel::new(channel, img.pixels().iter().map(|v| *v as f32).collect())],
        }],
    )
}

pub fn read_scalar_exr(path: &Path, channel: &str) -> Result<Image<f64>> {
    let layer = read_exr_single(path)?;
    let data = layer.require(channel, path)?;
    Image::from_vec(layer.width, layer.height, data.iter().map(|v| *v as f64).collect())
}

/// Writes display-referred linear values as 8-bit sRGB.
pub fn write_png_srgb(path: &Path, img: &Image<Rgb>) -> Result<()> {
    let bytes: Vec<u8> = img
        .pixels()
        .iter()
        .flat_map(|p| p.to_array().map(|v| quantize(srgb_encode(v))))
        .collect();
    write_png_bytes(path, img.width(), img.height(), image::ColorType::Rgb8, &bytes)
}

/// Writes values in `[0, 1]` as 8-bit grayscale without any transfer curve.
pub fn write_png_gray(path: &Path, img: &Image<f64>) -> Result<()> {
    let bytes: Vec<u8> = img.pixels().iter().map(|v| quantize(*v)).collect();
    write_png_bytes(path, img.width(), img.height(), image::ColorType::L8, &bytes)
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn write_png_bytes(path: &Path, w: usize, h: usize, color: image::ColorType, bytes: &[u8]) -> Result<()> {
    let mut buf = Cursor::new(Vec::new());
    image::write_buffer_with_format(&mut buf, bytes, w as u32, h as u32, color, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    atomic_write(path, buf.get_ref())
}

/// Reads a PNG (values in `[0, 1]`, no transfer curve applied) or an EXR
/// (`R,G,B` or a single channel broadcast to gray).
pub fn read_image_rgb(path: &Path) -> Result<(usize, usize, Vec<Rgb>)> {
    let is_exr = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("exr"))
        .unwrap_or(false);
    if is_exr {
        let layer = read_exr_single(path)?;
        let px = if layer.channel("R").is_some() {
            layer_to_rgb(&layer, None, path)?.into_pixels()
        } else {
            let only = layer
                .channels
                .first()
                .ok_or_else(|| exr_err(path, "no channels"))?;
            only.samples.iter().map(|v| Rgb::splat(*v as f64)).collect()
        };
        return Ok((layer.width, layer.height, px));
    }
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb32f();
    let (w, h) = rgb.dimensions();
    let px = rgb
        .pixels()
        .map(|p| Rgb::new(p[0] as f64, p[1] as f64, p[2] as f64))
        .collect();
    Ok((w as usize, h as usize, px))
}

/// Reads an 8-bit grayscale PNG (or the luma of a color PNG) into `[0, 1]`.
pub fn read_png_gray(path: &Path) -> Result<Image<f64>> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let l = img.to_luma32f();
    let (w, h) = l.dimensions();
    Image::from_vec(w as usize, h as usize, l.pixels().map(|p| p[0] as f64).collect())
}

/// Reads an sRGB PNG back into display-referred linear values.
pub fn read_png_srgb(path: &Path) -> Result<Image<Rgb>> {
    let (w, h, px) = read_image_rgb(path)?;
    Image::from_vec(w, h, px.into_iter().map(|p| p.map(crate::radiometry::srgb_decode)).collect())
}

/// Loads an equirect environment map. EXR is taken as linear radiance;
/// PNG/JPEG are decoded from sRGB.
pub fn read_env(path: &Path) -> Result<EnvironmentMap> {
    let is_exr = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("exr"))
        .unwrap_or(false);
    let (w, h, mut px) = read_image_rgb(path)?;
    if !is_exr {
        for p in &mut px {
            *p = p.map(crate::radiometry::srgb_decode);
        }
    }
    EnvironmentMap::new(w, h, px).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Writes the map with its intensity scale baked in.
pub fn write_env(path: &Path, env: &EnvironmentMap) -> Result<()> {
    let baked = env.baked();
    let img = Image::from_vec(baked.width(), baked.height(), baked.raw_pixels().to_vec())?;
    write_rgb_exr(path, &img, None)
}

/// Lists files in `dir` with the given extension, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exr_multi_layer_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.exr");
        let layers = vec![
            Layer {
                name: Some("level0".into()),
                width: 4,
                height: 2,
                channels: vec![
                    Channel::new("R", (0..8).map(|i| i as f32 * 0.5).collect()),
                    Channel::new("G", vec![1.5; 8]),
                ],
            },
            Layer {
                name: Some("level1".into()),
                width: 2,
                height: 1,
                channels: vec![Channel::new("R", vec![3.25, -1.0])],
            },
        ];
        write_exr(&path, &layers).unwrap();
        let back = read_exr(&path).unwrap();
        assert_eq!(back.len(), 2);
        let l0 = back.iter().find(|l| l.name.as_deref() == Some("level0")).unwrap();
        assert_eq!(l0.channel("R").unwrap(), layers[0].channels[0].samples.as_slice());
        let l1 = back.iter().find(|l| l.name.as_deref() == Some("level1")).unwrap();
        assert_eq!(l1.channel("R").unwrap(), &[3.25, -1.0]);
    }

    #[test]
    fn png_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.png");
        let img = Image::from_fn(5, 3, |x, y| Rgb::new(x as f64 / 4.0, y as f64 / 2.0, 0.5));
        write_png_srgb(&path, &img).unwrap();
        let back = read_png_srgb(&path).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((*a - *b).map(f64::abs).max_component() < 0.01);
        }
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/c.json");
        write_json(&path, &vec![1, 2, 3]).unwrap();
        let names: Vec<_> = fs::read_dir(path.parent().unwrap())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, vec![std::ffi::OsString::from("c.json")]);
        let v: Vec<i32> = read_json(&path).unwrap();
        assert_eq!(v, vec![1, 2, 3]);
    }
}
