//! Evaluation over two directories of frames. A directory is either a
//! rendered dataset (with a manifest) or a baseline output tree holding
//! `<clip>/<NNNN>.exr`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use dr_forge::dataset_io::{read_gbuffer, read_hdr, read_manifest, ClipRecord, MANIFEST_FILE};
use dr_forge::io;
use dr_forge::metrics::{evaluate_color, evaluate_normals, evaluate_scalar, ClipMetrics, EvalKind, MetricReport, MetricValues};
use dr_forge::radiometry::srgb_encode;
use dr_forge::{Image, Rgb, Tonemap};
use glam::DVec3;
use rayon::prelude::*;

enum Source {
    Dataset { root: PathBuf, clips: Vec<ClipRecord> },
    Tree { root: PathBuf },
}

enum Plane {
    Color(Image<Rgb>),
    Scalar(Image<f64>),
    Normal(Image<DVec3>),
}

impl Source {
    fn open(dir: &Path) -> Result<Source> {
        let manifest = dir.join(MANIFEST_FILE);
        if manifest.is_file() {
            let m = read_manifest(&manifest)?;
            Ok(Source::Dataset {
                root: dir.to_path_buf(),
                clips: m.clips.into_iter().filter(|c| c.is_rendered()).collect(),
            })
        } else if dir.is_dir() {
            Ok(Source::Tree { root: dir.to_path_buf() })
        } else {
            bail!("{} is neither a dataset nor a directory", dir.display())
        }
    }

    /// Clip ids and frame counts, sorted by id.
    fn clips(&self) -> Result<Vec<(String, usize)>> {
        let mut out = match self {
            Source::Dataset { clips, .. } => clips.iter().map(|c| (c.id.clone(), c.files.len())).collect(),
            Source::Tree { root } => {
                let mut out = Vec::new();
                for entry in std::fs::read_dir(root).with_context(|| format!("listing {}", root.display()))? {
                    let p = entry?.path();
                    if p.is_dir() {
                        let n = io::list_files(&p, "exr")?.len();
                        if n > 0 {
                            out.push((p.file_name().unwrap().to_string_lossy().into_owned(), n));
                        }
                    }
                }
                out
            }
        };
        out.sort();
        Ok(out)
    }

    fn record(&self, clip: &str) -> Option<(&Path, &ClipRecord)> {
        match self {
            Source::Dataset { root, clips } => clips.iter().find(|c| c.id == clip).map(|c| (root.as_path(), c)),
            Source::Tree { .. } => None,
        }
    }

    fn load(&self, clip: &str, frame: usize, kind: EvalKind, tonemap: Tonemap) -> Result<Plane> {
        let display = |hdr: Image<Rgb>| hdr.map(|p| tonemap.apply(*p).map(srgb_encode));
        let plane = match self {
            Source::Dataset { .. } => {
                let (root, record) = self.record(clip).ok_or_else(|| anyhow!("clip {clip} is missing"))?;
                if kind == EvalKind::Render {
                    Plane::Color(display(read_hdr(root, record, frame)?))
                } else {
                    let g = read_gbuffer(root, record, frame)?;
                    match kind {
                        EvalKind::Albedo => Plane::Color(g.base_color),
                        EvalKind::Roughness => Plane::Scalar(g.roughness),
                        EvalKind::Metallic => Plane::Scalar(g.metallic),
                        _ => Plane::Normal(g.normal),
                    }
                }
            }
            Source::Tree { root } => {
                let path = root.join(clip).join(format!("{frame:04}.exr"));
                match kind {
                    EvalKind::Render => Plane::Color(display(io::read_rgb_exr(&path, None)?)),
                    EvalKind::Albedo => Plane::Color(io::read_rgb_exr(&path, None)?),
                    EvalKind::Roughness | EvalKind::Metallic => Plane::Scalar(io::read_scalar_exr(&path, "Y")?),
                    EvalKind::Normal => Plane::Normal(io::read_rgb_exr(&path, None)?.map(|p| DVec3::new(p.r, p.g, p.b))),
                }
            }
        };
        Ok(plane)
    }

    fn hit_mask(&self, clip: &str, frame: usize) -> Result<Option<Image<bool>>> {
        match self.record(clip) {
            Some((root, record)) => Ok(Some(read_gbuffer(root, record, frame)?.hit)),
            None => Ok(None),
        }
    }
}

fn evaluate_frame(pred: Plane, gt: Plane, mask: Option<&Image<bool>>) -> Result<MetricValues> {
    Ok(match (pred, gt) {
        (Plane::Color(p), Plane::Color(g)) => evaluate_color(&p, &g, mask)?,
        (Plane::Scalar(p), Plane::Scalar(g)) => evaluate_scalar(&p, &g, mask)?,
        (Plane::Normal(p), Plane::Normal(g)) => evaluate_normals(&p, &g, mask)?,
        _ => unreachable!("both sides load the same kind"),
    })
}

/// Scores every clip of `gt` against the same clip of `pred`. Renders are
/// compared as tonemapped sRGB values over the whole frame; G-buffer
/// attributes are compared raw over the ground-truth hit mask.
pub fn evaluate(pred_dir: &Path, gt_dir: &Path, kind: EvalKind, tonemap: Tonemap) -> Result<MetricReport> {
    let pred = Source::open(pred_dir)?;
    let gt = Source::open(gt_dir)?;
    let gt_clips = gt.clips()?;
    if gt_clips.is_empty() {
        bail!("no clips to evaluate in {}", gt_dir.display());
    }
    let pred_clips = pred.clips()?;
    let clips = gt_clips
        .par_iter()
        .map(|(id, frames)| {
            let started = Instant::now();
            let pred_frames = pred_clips
                .iter()
                .find(|(p, _)| p == id)
                .map(|(_, n)| *n)
                .ok_or_else(|| anyhow!("clip {id} is missing from {}", pred_dir.display()))?;
            if pred_frames < *frames {
                bail!("clip {id} has {pred_frames} predicted frames, expected {frames}");
            }
            let values = (0..*frames)
                .map(|f| {
                    let mask = match kind {
                        EvalKind::Render => None,
                        _ => match gt.hit_mask(id, f)? {
                            Some(m) => Some(m),
                            None => pred.hit_mask(id, f)?,
                        },
                    };
                    evaluate_frame(pred.load(id, f, kind, tonemap)?, gt.load(id, f, kind, tonemap)?, mask.as_ref())
                        .with_context(|| format!("clip {id} frame {f}"))
                })
                .collect::<Result<Vec<_>>>()?;
            log::info!("evaluated {id} ({frames} frames) in {:.2?}", started.elapsed());
            Ok(ClipMetrics {
                clip: id.clone(),
                mean: MetricValues::mean(&values),
                frames: values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::new(kind, clips))
}
