//! Small geometric helpers shared by the renderer, the baselines and the
//! lighting encodings.

use std::f64::consts::{FRAC_1_PI, PI, TAU};

use glam::{DMat3, DQuat, DVec2, DVec3};

pub const UNIT_TOLERANCE: f64 = 1e-4;

/// Equirectangular pixel coordinate to world direction.
///
/// `u, v` in `[0, 1]`. The polar angle is measured from +Y (`v = 0` is
/// straight up) and the azimuth from the -Z forward axis, so `(0.5, 0.5)` maps
/// to `(0, 0, -1)`.
#[inline]
pub fn equirect_direction(u: f64, v: f64) -> DVec3 {
    let theta = PI * v;
    let phi = TAU * (u - 0.5);
    let (sin_t, cos_t) = theta.sin_cos();
    let (sin_p, cos_p) = phi.sin_cos();
    DVec3::new(sin_t * sin_p, cos_t, -sin_t * cos_p)
}

/// Inverse of [`equirect_direction`]. `u` lies in `[0, 1]` and `v` in `[0, 1]`.
#[inline]
pub fn direction_to_equirect(dir: DVec3) -> DVec2 {
    let theta = dir.y.clamp(-1.0, 1.0).acos();
    let phi = dir.x.atan2(-dir.z);
    DVec2::new(phi * (0.5 * FRAC_1_PI) + 0.5, theta * FRAC_1_PI)
}

#[inline]
pub fn is_unit(v: DVec3, tol: f64) -> bool {
    (v.length() - 1.0).abs() <= tol
}

#[inline]
pub fn reflect(wo: DVec3, n: DVec3) -> DVec3 {
    2.0 * wo.dot(n) * n - wo
}

/// Orthonormal frame around a unit normal.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub tangent: DVec3,
    pub bitangent: DVec3,
    pub normal: DVec3,
}

impl Frame {
    /// Duff et al. branchless construction.
    pub fn from_normal(n: DVec3) -> Self {
        let sign = 1.0_f64.copysign(n.z);
        let a = -1.0 / (sign + n.z);
        let b = n.x * n.y * a;
        let tangent = DVec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
        let bitangent = DVec3::new(b, sign + n.y * n.y * a, -n.y);
        Frame {
            tangent,
            bitangent,
            normal: n,
        }
    }

    #[inline]
    pub fn to_local(&self, v: DVec3) -> DVec3 {
        DVec3::new(v.dot(self.tangent), v.dot(self.bitangent), v.dot(self.normal))
    }

    #[inline]
    pub fn to_world(&self, v: DVec3) -> DVec3 {
        self.tangent * v.x + self.bitangent * v.y + self.normal * v.z
    }
}

/// Camera-to-world rotation for a camera at `eye` looking at `target`.
/// The camera looks down its local -Z axis with +Y up.
pub fn look_at(eye: DVec3, target: DVec3, up: DVec3) -> DQuat {
    let back = (eye - target).normalize();
    let right = up.cross(back).normalize();
    let true_up = back.cross(right);
    DQuat::from_mat3(&DMat3::from_cols(right, true_up, back)).normalize()
}

/// Radical inverse base 2, used for deterministic low-discrepancy point sets.
#[inline]
pub fn radical_inverse_vdc(mut bits: u32) -> f64 {
    bits = bits.rotate_right(16);
    bits = ((bits & 0x5555_5555) << 1) | ((bits & 0xAAAA_AAAA) >> 1);
    bits = ((bits & 0x3333_3333) << 2) | ((bits & 0xCCCC_CCCC) >> 2);
    bits = ((bits & 0x0F0F_0F0F) << 4) | ((bits & 0xF0F0_F0F0) >> 4);
    bits = ((bits & 0x00FF_00FF) << 8) | ((bits & 0xFF00_FF00) >> 8);
    bits as f64 * (1.0 / 4_294_967_296.0)
}

#[inline]
pub fn hammersley(i: u32, n: u32) -> DVec2 {
    DVec2::new((i as f64 + 0.5) / n as f64, radical_inverse_vdc(i))
}

/// Cosine-weighted hemisphere sample around +Z.
#[inline]
pub fn cosine_hemisphere(u: DVec2) -> DVec3 {
    let r = u.x.sqrt();
    let phi = TAU * u.y;
    let z = (1.0 - u.x).max(0.0).sqrt();
    DVec3::new(r * phi.cos(), r * phi.sin(), z)
}
