//! Image and G-buffer error metrics: PSNR, scale-invariant PSNR, SSIM, RMSE
//! and mean angular error, plus the versioned report written by evaluation.

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::radiometry::Rgb;

/// Reported in place of an infinite PSNR.
pub const PSNR_CAP: f64 = 99.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;
pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn masked<'a, T>(img: &'a Image<T>, mask: Option<&'a Image<bool>>) -> impl Iterator<Item = (usize, &'a T)> + 'a {
    img.pixels()
        .iter()
        .enumerate()
        .filter(move |(i, _)| mask.map_or(true, |m| m.pixels()[*i]))
}

fn check_mask<T>(img: &Image<T>, mask: Option<&Image<bool>>) -> Result<()> {
    if let Some(m) = mask {
        img.ensure_same_dims(m, "mask")?;
        if !m.pixels().iter().any(|h| *h) {
            return Err(Error::domain("mask selects no pixels"));
        }
    } else if img.pixels().is_empty() {
        return Err(Error::domain("empty image"));
    }
    Ok(())
}

/// Per-channel least-squares scale `s` minimizing `|s * pred - gt|^2` over
/// the masked pixels; 1 for channels where `pred` is all zero.
pub fn solve_scale(pred: &Image<Rgb>, gt: &Image<Rgb>, mask: Option<&Image<bool>>) -> Result<Rgb> {
    pred.ensure_same_dims(gt, "solve_scale")?;
    check_mask(pred, mask)?;
    let mut num = [0.0; 3];
    let mut den = [0.0; 3];
    for (i, p) in masked(pred, mask) {
        let g = gt.pixels()[i];
        for c in 0..3 {
            num[c] += p.channel(c) * g.channel(c);
            den[c] += p.channel(c) * p.channel(c);
        }
    }
    let s = |c: usize| if den[c] == 0.0 { 1.0 } else { num[c] / den[c] };
    Ok(Rgb::new(s(0), s(1), s(2)))
}

pub fn apply_scale(img: &Image<Rgb>, scale: Rgb) -> Image<Rgb> {
    img.map(|p| *p * scale)
}

pub fn mse(pred: &Image<Rgb>, gt: &Image<Rgb>, mask: Option<&Image<bool>>) -> Result<f64> {
    pred.ensure_same_dims(gt, "mse")?;
    check_mask(pred, mask)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (i, p) in masked(pred, mask) {
        let d = *p - gt.pixels()[i];
        sum += d.r * d.r + d.g * d.g + d.b * d.b;
        n += 3;
    }
    Ok(sum / n as f64)
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP;
    }
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP)
}

pub fn psnr(pred: &Image<Rgb>, gt: &Image<Rgb>, peak: f64) -> Result<f64> {
    Ok(psnr_from_mse(mse(pred, gt, None)?, peak))
}

pub fn psnr_masked(pred: &Image<Rgb>, gt: &Image<Rgb>, mask: Option<&Image<bool>>, peak: f64) -> Result<f64> {
    Ok(psnr_from_mse(mse(pred, gt, mask)?, peak))
}

/// PSNR after rescaling `pred` by its per-image least-squares scale. Returns
/// the dB value and the scale.
pub fn si_psnr(pred: &Image<Rgb>, gt: &Image<Rgb>, mask: Option<&Image<bool>>, peak: f64) -> Result<(f64, Rgb)> {
    let s = solve_scale(pred, gt, mask)?;
    let v = psnr_from_mse(mse(&apply_scale(pred, s), gt, mask)?, peak);
    Ok((v, s))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let x = i as f64 - c;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Valid-mode separable filter of a `w x h` plane.
fn filter(plane: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w + 1 - SSIM_WINDOW, h + 1 - SSIM_WINDOW);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM of one channel over every fully covered window position.
pub fn ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize) -> Result<f64> {
    if a.len() != w * h || b.len() != w * h {
        return Err(Error::domain("ssim: plane size mismatch"));
    }
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::domain(format!("ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}")));
    }
    let k = gaussian_window();
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_a = filter(a, w, h, &k);
    let mu_b = filter(b, w, h, &k);
    let aa = filter(&prod(a, a), w, h, &k);
    let bb = filter(&prod(b, b), w, h, &k);
    let ab = filter(&prod(a, b), w, h, &k);
    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        sum += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2)) / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
    }
    Ok(sum / mu_a.len() as f64)
}

/// SSIM averaged over channels, for images with values in `[0, 1]`.
pub fn ssim(pred: &Image<Rgb>, gt: &Image<Rgb>) -> Result<f64> {
    pred.ensure_same_dims(gt, "ssim")?;
    let (w, h) = pred.dims();
    let mut total = 0.0;
    for c in 0..3 {
        let a: Vec<f64> = pred.pixels().iter().map(|p| p.channel(c)).collect();
        let b: Vec<f64> = gt.pixels().iter().map(|p| p.channel(c)).collect();
        total += ssim_plane(&a, &b, w, h)?;
    }
    Ok(total / 3.0)
}

pub fn rmse(pred: &Image<f64>, gt: &Image<f64>, mask: Option<&Image<bool>>) -> Result<f64> {
    pred.ensure_same_dims(gt, "rmse")?;
    check_mask(pred, mask)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (i, p) in masked(pred, mask) {
        let d = p - gt.pixels()[i];
        sum += d * d;
        n += 1;
    }
    Ok((sum / n as f64).sqrt())
}

/// Mean angle in degrees between corresponding normals over the mask.
pub fn mean_angular_error(pred: &Image<DVec3>, gt: &Image<DVec3>, mask: Option<&Image<bool>>) -> Result<f64> {
    pred.ensure_same_dims(gt, "angular error")?;
    check_mask(pred, mask)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (i, p) in masked(pred, mask) {
        let g = gt.pixels()[i];
        let (Some(p), Some(g)) = (p.try_normalize(), g.try_normalize()) else {
            return Err(Error::domain(format!("zero normal at pixel {i} inside the mask")));
        };
        sum += p.cross(g).length().atan2(p.dot(g)).to_degrees();
        n += 1;
    }
    Ok(sum / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalKind {
    Render,
    Albedo,
    Roughness,
    Metallic,
    Normal,
}

impl std::str::FromStr for EvalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "render" => EvalKind::Render,
            "albedo" => EvalKind::Albedo,
            "roughness" => EvalKind::Roughness,
            "metallic" => EvalKind::Metallic,
            "normal" => EvalKind::Normal,
            _ => return Err(Error::domain(format!("unknown eval kind {s:?}"))),
        })
    }
}

/// Metric values of one frame, or means over frames and clips. Fields that
/// do not apply to the evaluated kind are absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psnr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssim: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub si_psnr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub si_scale: Option<Rgb>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_error_deg: Option<f64>,
}

impl MetricValues {
    /// Field-wise mean over `items`; a field is kept if every item has it.
    pub fn mean(items: &[MetricValues]) -> MetricValues {
        fn avg(items: &[MetricValues], f: impl Fn(&MetricValues) -> Option<f64>) -> Option<f64> {
            if items.is_empty() {
                return None;
            }
            let v: Option<Vec<f64>> = items.iter().map(f).collect();
            v.map(|v| v.iter().sum::<f64>() / v.len() as f64)
        }
        let scale = |c: usize| avg(items, |m| m.si_scale.map(|s| s.channel(c)));
        MetricValues {
            psnr: avg(items, |m| m.psnr),
            ssim: avg(items, |m| m.ssim),
            si_psnr: avg(items, |m| m.si_psnr),
            si_scale: match (scale(0), scale(1), scale(2)) {
                (Some(r), Some(g), Some(b)) => Some(Rgb::new(r, g, b)),
                _ => None,
            },
            rmse: avg(items, |m| m.rmse),
            angular_error_deg: avg(items, |m| m.angular_error_deg),
        }
    }
}

/// Color metrics for renders (tonemapped LDR) and base color. The hit mask
/// restricts the scale solve and errors for base color.
pub fn evaluate_color(pred: &Image<Rgb>, gt: &Image<Rgb>, mask: Option<&Image<bool>>) -> Result<MetricValues> {
    let (si, scale) = si_psnr(pred, gt, mask, 1.0)?;
    Ok(MetricValues {
        psnr: Some(psnr_masked(pred, gt, mask, 1.0)?),
        ssim: Some(ssim(pred, gt)?),
        si_psnr: Some(si),
        si_scale: Some(scale),
        ..MetricValues::default()
    })
}

pub fn evaluate_scalar(pred: &Image<f64>, gt: &Image<f64>, mask: Option<&Image<bool>>) -> Result<MetricValues> {
    Ok(MetricValues {
        rmse: Some(rmse(pred, gt, mask)?),
        ..MetricValues::default()
    })
}

pub fn evaluate_normals(pred: &Image<DVec3>, gt: &Image<DVec3>, mask: Option<&Image<bool>>) -> Result<MetricValues> {
    Ok(MetricValues {
        angular_error_deg: Some(mean_angular_error(pred, gt, mask)?),
        ..MetricValues::default()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipMetrics {
    pub clip: String,
    pub frames: Vec<MetricValues>,
    pub mean: MetricValues,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub kind: EvalKind,
    /// Scale-invariant metrics solve one scale per image.
    pub si_scale_mode: String,
    pub clips: Vec<ClipMetrics>,
    pub aggregate: MetricValues,
}

impl MetricReport {
    pub fn new(kind: EvalKind, clips: Vec<ClipMetrics>) -> MetricReport {
        let means: Vec<MetricValues> = clips.iter().map(|c| c.mean.clone()).collect();
        MetricReport {
            schema_version: REPORT_SCHEMA_VERSION,
            kind,
            si_scale_mode: "per_image".into(),
            aggregate: MetricValues::mean(&means),
            clips,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_examples() {
        let gt = Image::filled(4, 4, Rgb::splat(0.5));
        assert_eq!(psnr(&gt, &gt, 1.0).unwrap(), PSNR_CAP);
        let pred = Image::filled(4, 4, Rgb::splat(0.6));
        assert!((psnr(&pred, &gt, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let gt = Image::from_fn(4, 4, |x, y| Rgb::new(0.1 * x as f64, 0.2, 0.05 * y as f64 + 0.01));
        let pred = gt.map(|p| *p * 3.0);
        assert!(psnr(&pred, &gt, 1.0).unwrap() < PSNR_CAP);
        assert_eq!(si_psnr(&pred, &gt, None, 1.0).unwrap().0, PSNR_CAP);
    }

    #[test]
    fn scale_examples() {
        let gt = Image::from_fn(3, 3, |x, y| Rgb::new(x as f64 + 1.0, y as f64, 0.5));
        assert_eq!(solve_scale(&gt.map(|p| *p * 2.0), &gt, None).unwrap(), Rgb::splat(0.5));
        assert_eq!(solve_scale(&gt, &gt, None).unwrap(), Rgb::splat(1.0));
        let zero = Image::filled(3, 3, Rgb::BLACK);
        assert_eq!(solve_scale(&zero, &gt, None).unwrap(), Rgb::splat(1.0));
        let empty = Image::filled(3, 3, false);
        assert!(solve_scale(&gt, &gt, Some(&empty)).is_err());
    }

    #[test]
    fn angular_error_examples() {
        let a = Image::filled(2, 2, DVec3::X);
        assert_eq!(mean_angular_error(&a, &a, None).unwrap(), 0.0);
        assert!((mean_angular_error(&a, &Image::filled(2, 2, DVec3::Y), None).unwrap() - 90.0).abs() < 1e-12);
        assert!((mean_angular_error(&a, &Image::filled(2, 2, -DVec3::X), None).unwrap() - 180.0).abs() < 1e-12);
    }

    #[test]
    fn small_images_are_rejected_by_ssim() {
        let a = Image::filled(10, 20, Rgb::WHITE);
        assert!(ssim(&a, &a).is_err());
    }

    #[test]
    fn mean_drops_partial_fields() {
        let a = MetricValues { psnr: Some(10.0), rmse: Some(1.0), ..Default::default() };
        let b = MetricValues { psnr: Some(20.0), ..Default::default() };
        let m = MetricValues::mean(&[a, b]);
        assert_eq!(m.psnr, Some(15.0));
        assert_eq!(m.rmse, None);
    }
}
