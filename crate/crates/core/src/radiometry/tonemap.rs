use serde::{Deserialize, Serialize};

use super::Rgb;
use crate::error::{Error, Result};

/// Display transform used for LDR outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tonemap {
    #[default]
    Agx,
    Reinhard,
}

impl Tonemap {
    /// Maps linear HDR radiance to linear display values in `[0, 1]`.
    pub fn apply(self, hdr: Rgb) -> Rgb {
        let hdr = hdr.map(|v| if v.is_finite() { v.max(0.0) } else { 0.0 });
        match self {
            Tonemap::Agx => agx_tonemap(hdr),
            Tonemap::Reinhard => hdr.map(|v| v / (1.0 + v)),
        }
    }
}

/// Per-channel Reinhard operator `x / (1 + x)`.
pub fn reinhard_tonemap(hdr: Rgb) -> Result<Rgb> {
    if !hdr.is_valid_radiance() {
        return Err(Error::InvalidRadiance(format!(
            "reinhard input must be finite and non-negative, got {hdr:?}"
        )));
    }
    Ok(hdr.map(|v| v / (1.0 + v)))
}

// AgX base look, polynomial fit of the default contrast curve.
// Matrices are row-major here (the usual GLSL listing is column-major).
const AGX_INSET: [[f64; 3]; 3] = [
    [0.842479062253094, 0.0784335999999992, 0.0792237451477643],
    [0.0423282422610123, 0.878468636469772, 0.0791661274605434],
    [0.0423756549057051, 0.0784336, 0.879142973793104],
];
const AGX_OUTSET: [[f64; 3]; 3] = [
    [1.19687900512017, -0.0980208811401368, -0.0990297440797205],
    [-0.0528968517574562, 1.15190312990417, -0.0989611768448433],
    [-0.0529716355144438, -0.0980434501171241, 1.15107367264116],
];
const AGX_MIN_EV: f64 = -12.47393;
const AGX_MAX_EV: f64 = 4.026069;

fn mat_mul(m: &[[f64; 3]; 3], c: Rgb) -> Rgb {
    Rgb::new(
        m[0][0] * c.r + m[0][1] * c.g + m[0][2] * c.b,
        m[1][0] * c.r + m[1][1] * c.g + m[1][2] * c.b,
        m[2][0] * c.r + m[2][1] * c.g + m[2][2] * c.b,
    )
}

fn agx_contrast(x: f64) -> f64 {
    let x2 = x * x;
    let x4 = x2 * x2;
    15.5 * x4 * x2 - 40.14 * x4 * x + 31.96 * x4 - 6.868 * x2 * x + 0.4298 * x2 + 0.1191 * x
        - 0.00232
}

/// AgX display transform; input linear Rec. 709, output linear display values.
pub fn agx_tonemap(hdr: Rgb) -> Rgb {
    let c = mat_mul(&AGX_INSET, hdr).map(|v| {
        let ev = v.max(1e-10).log2().clamp(AGX_MIN_EV, AGX_MAX_EV);
        agx_contrast((ev - AGX_MIN_EV) / (AGX_MAX_EV - AGX_MIN_EV))
    });
    mat_mul(&AGX_OUTSET, c).map(|v| v.max(0.0).powf(2.2).clamp(0.0, 1.0))
}

/// sRGB opto-electronic transfer function on a value in `[0, 1]`.
#[inline]
pub fn srgb_encode(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.0031308 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

#[inline]
pub fn srgb_decode(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}
