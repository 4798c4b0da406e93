//! Object insertion by shading ratio: the change an inserted object causes in
//! a re-render (shadows, interreflections) is transferred onto the original
//! background as a per-pixel multiplicative ratio. All inputs are linear HDR.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::radiometry::Rgb;

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_RATIO_MAX: f64 = 8.0;

#[derive(Clone, Debug)]
pub struct CompositeInputs {
    /// Original background.
    pub i_bg: Image<Rgb>,
    /// Render of the scene with the inserted object.
    pub i_ins_star: Image<Rgb>,
    /// Render of the same scene without the object.
    pub i_bg_star: Image<Rgb>,
    /// Object coverage in `[0, 1]`.
    pub mask: Image<f64>,
}

impl CompositeInputs {
    pub fn validate(&self) -> Result<()> {
        self.i_bg.ensure_same_dims(&self.i_ins_star, "composite")?;
        self.i_bg.ensure_same_dims(&self.i_bg_star, "composite")?;
        self.i_bg.ensure_same_dims(&self.mask, "composite")?;
        if let Some(m) = self.mask.pixels().iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(Error::domain(format!("mask value {m} outside [0, 1]")));
        }
        Ok(())
    }
}

/// Per-channel shading ratio. Equal renders give exactly 1 so untouched
/// background passes through unchanged even where the renders are black.
pub fn shading_ratio(ins: f64, bg: f64, epsilon: f64, ratio_max: f64) -> f64 {
    if ins == bg {
        1.0
    } else {
        (ins / bg.max(epsilon)).clamp(0.0, ratio_max)
    }
}

pub fn composite_insertion(inputs: &CompositeInputs, epsilon: f64) -> Result<Image<Rgb>> {
    composite_insertion_with(inputs, epsilon, DEFAULT_RATIO_MAX)
}

/// `(1 - M) * I_bg * rho + M * I*_ins`, with `rho = I*_ins / max(I*_bg, eps)`
/// clamped to `[0, ratio_max]`.
pub fn composite_insertion_with(inputs: &CompositeInputs, epsilon: f64, ratio_max: f64) -> Result<Image<Rgb>> {
    inputs.validate()?;
    if !(epsilon > 0.0) {
        return Err(Error::domain("epsilon must be positive"));
    }
    if !(ratio_max > 0.0) {
        return Err(Error::domain("ratio_max must be positive"));
    }
    let (w, h) = inputs.i_bg.dims();
    let px: Vec<Rgb> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let bg = inputs.i_bg.pixels()[i];
            let ins = inputs.i_ins_star.pixels()[i];
            let bg_star = inputs.i_bg_star.pixels()[i];
            let m = inputs.mask.pixels()[i];
            let mut out = [0.0; 3];
            for (c, o) in out.iter_mut().enumerate() {
                let rho = shading_ratio(ins.channel(c), bg_star.channel(c), epsilon, ratio_max);
                *o = (1.0 - m) * bg.channel(c) * rho + m * ins.channel(c);
            }
            Rgb::new(out[0], out[1], out[2])
        })
        .collect();
    Image::from_vec(w, h, px)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(bg: f64, ins: f64, bg_star: f64, m: f64) -> CompositeInputs {
        CompositeInputs {
            i_bg: Image::filled(2, 2, Rgb::splat(bg)),
            i_ins_star: Image::filled(2, 2, Rgb::splat(ins)),
            i_bg_star: Image::filled(2, 2, Rgb::splat(bg_star)),
            mask: Image::filled(2, 2, m),
        }
    }

    #[test]
    fn shadow_halves_the_background() {
        let out = composite_insertion(&inputs(0.4, 0.2, 0.4, 0.0), DEFAULT_EPSILON).unwrap();
        assert!(out.pixels().iter().all(|p| *p == Rgb::splat(0.2)));
    }

    #[test]
    fn ratio_is_clamped() {
        let out = composite_insertion(&inputs(0.5, 1.0, 0.0, 0.0), DEFAULT_EPSILON).unwrap();
        assert_eq!(out.pixels()[0], Rgb::splat(0.5 * DEFAULT_RATIO_MAX));
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let mut i = inputs(0.5, 0.5, 0.5, 0.0);
        i.mask = Image::filled(3, 2, 0.0);
        assert!(composite_insertion(&i, DEFAULT_EPSILON).is_err());
        let mut i = inputs(0.5, 0.5, 0.5, 0.0);
        i.mask.set(0, 0, 1.5);
        assert!(composite_insertion(&i, DEFAULT_EPSILON).is_err());
        assert!(composite_insertion(&inputs(0.5, 0.5, 0.5, 0.0), 0.0).is_err());
    }
}
