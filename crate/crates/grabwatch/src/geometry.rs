//! The projection model tying a payload's swing state to its image position.
//!
//! The camera sits at the rope's suspension point and looks roughly straight
//! down. `alpha` is the angle between rope and gravity (the swing angle),
//! `beta` the fixed angle between the camera's principal axis and gravity,
//! `gamma` the ground-plane azimuth of the swing, and `h` the focal length in
//! pixel units. The observable per frame is the pixel distance `m` from the
//! principal point together with the image-plane angle `theta` measured against
//! the fitted zero reference line.
//!
//! Core relations, with `c = cos(alpha)cos(beta) + sin(alpha)sin(beta)cos(gamma)`
//! (the cosine of the angle between rope and principal axis):
//!
//! ```text
//! (m² + h²) · c² = h²                                            (projection)
//! cos(alpha) = (m·sin(beta)·cos(theta) + h·cos(beta)) / √(m²+h²) (inversion)
//! ```

use crate::angle::Angle;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack tolerated when clamping arccos/arcsin arguments to [−1, 1].
///
/// Excess within the slack is floating-point rounding; anything beyond marks
/// genuinely inconsistent data.
pub const UNIT_CLIP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("payload is at or behind the image plane (cos of viewing angle = {cos_aoc})")]
    OutOfView { cos_aoc: f64 },
    #[error("theta is undefined for m = 0 or camera angle 0")]
    UndefinedTheta,
    #[error("inconsistent geometry: arc argument {value} lies outside [-1, 1] beyond slack")]
    InconsistentGeometry { value: f64 },
    #[error("validation ratio m*b/(x*l) = {ratio} exceeds 1")]
    InvalidValidationInput { ratio: f64 },
    #[error("{name} is outside its domain: {value}")]
    Domain { name: &'static str, value: f64 },
}

/// Clamps `value` to [−1, 1], tolerating rounding excess up to [`UNIT_CLIP_SLACK`].
pub fn clip_unit(value: f64) -> Result<f64, GeometryError> {
    if value.abs() <= 1.0 {
        Ok(value)
    } else if value.abs() <= 1.0 + UNIT_CLIP_SLACK {
        Ok(value.clamp(-1.0, 1.0))
    } else {
        Err(GeometryError::InconsistentGeometry { value })
    }
}

/// Physical camera parameters, as printed in a lens/sensor datasheet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub focal_length_mm: f64,
    pub sensor_diagonal_mm: f64,
    pub image_width_px: u32,
    pub image_height_px: u32,
}

impl CameraIntrinsics {
    pub fn new(
        focal_length_mm: f64,
        sensor_diagonal_mm: f64,
        image_width_px: u32,
        image_height_px: u32,
    ) -> Result<Self, GeometryError> {
        let intr = CameraIntrinsics {
            focal_length_mm,
            sensor_diagonal_mm,
            image_width_px,
            image_height_px,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.focal_length_mm.is_finite() && self.focal_length_mm > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal_length_mm = {}",
                self.focal_length_mm
            )));
        }
        if !(self.sensor_diagonal_mm.is_finite() && self.sensor_diagonal_mm > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "sensor_diagonal_mm = {}",
                self.sensor_diagonal_mm
            )));
        }
        if self.image_width_px == 0 || self.image_height_px == 0 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "image size = {}x{}",
                self.image_width_px, self.image_height_px
            )));
        }
        Ok(())
    }

    /// Pixels per millimetre on the sensor: pixel diagonal over physical diagonal.
    pub fn pixel_density(&self) -> f64 {
        let w = f64::from(self.image_width_px);
        let h = f64::from(self.image_height_px);
        (w * w + h * h).sqrt() / self.sensor_diagonal_mm
    }

    /// Focal length converted to pixel units: `h = h* · d0`.
    pub fn focal_length_px(&self) -> f64 {
        self.focal_length_mm * self.pixel_density()
    }

    /// Geometric image centre, the default principal point.
    pub fn principal_point(&self) -> (f64, f64) {
        (
            f64::from(self.image_width_px) / 2.0,
            f64::from(self.image_height_px) / 2.0,
        )
    }
}

/// Latent state of the swinging payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwingState {
    /// Angle between rope and gravity.
    pub alpha: Angle,
    /// Ground-plane azimuth of the swing direction.
    pub gamma: Angle,
    /// Rope length in metres.
    pub rope_length: f64,
}

/// One frame's observation in polar image-plane coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    /// Pixel distance from the principal point.
    pub m: f64,
    /// Signed angle against the zero reference line; zero by convention at m = 0.
    /// Only cos(theta) enters the swing-angle estimate.
    pub theta: Angle,
}

/// Inputs for the width-based cross-check estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationInput {
    /// Pixel distance of the payload centre from the principal point.
    pub m: f64,
    /// Observed payload width on the image, in pixels.
    pub x: f64,
    /// True payload width in metres.
    pub b: f64,
    /// Rope length in metres.
    pub l: f64,
}

fn check_focal(h: f64) -> Result<(), GeometryError> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::InvalidIntrinsics(format!(
            "focal length in pixels = {h}"
        )))
    }
}

/// Cosine of the angle between the rope direction and the camera's principal axis.
pub fn cos_viewing_angle(alpha: Angle, beta: Angle, gamma: Angle) -> f64 {
    alpha.cos() * beta.cos() + alpha.sin() * beta.sin() * gamma.cos()
}

/// Forward projection: pixel distance of the payload from the principal point.
///
/// Solves `(m² + h²)·c² = h²` for `m ≥ 0`. Fails when the payload direction is
/// at or behind the image plane (`c ≤ 0`).
pub fn project_m(alpha: Angle, beta: Angle, gamma: Angle, h: f64) -> Result<f64, GeometryError> {
    check_focal(h)?;
    let c = cos_viewing_angle(alpha, beta, gamma);
    if c <= 0.0 {
        return Err(GeometryError::OutOfView { cos_aoc: c });
    }
    // c may exceed 1 by a rounding hair when the directions align.
    let t = (1.0 / (c * c) - 1.0).max(0.0);
    Ok(h * t.sqrt())
}

/// Image-plane angle implied by a known swing state: returns `cos(theta)`.
///
/// Undefined when `m = 0` (payload at the principal point) or `beta = 0`
/// (reference direction degenerates).
pub fn theta_from_state(alpha: Angle, beta: Angle, m: f64, h: f64) -> Result<f64, GeometryError> {
    check_focal(h)?;
    if m <= 0.0 || beta.sin() <= 0.0 {
        return Err(GeometryError::UndefinedTheta);
    }
    let cos_theta = (alpha.cos() * (m * m + h * h).sqrt() - h * beta.cos()) / (m * beta.sin());
    clip_unit(cos_theta)
}

/// Recovers the swing angle from an image observation.
///
/// `alpha = arccos((m·sin(beta)·cos(theta) + h·cos(beta)) / √(m² + h²))`.
/// At `m = 0` this returns `beta` exactly; at `beta = 0` the result is
/// `arccos(h/√(m² + h²))` independent of `theta`.
pub fn estimate_alpha(m: f64, theta: Angle, beta: Angle, h: f64) -> Result<Angle, GeometryError> {
    check_focal(h)?;
    if !m.is_finite() || m < 0.0 {
        return Err(GeometryError::Domain {
            name: "m",
            value: m,
        });
    }
    if m == 0.0 {
        return Ok(beta);
    }
    let rhs = (m * beta.sin() * theta.cos() + h * beta.cos()) / (m * m + h * h).sqrt();
    Ok(Angle::from_radians(clip_unit(rhs)?.acos()))
}

/// Width-based estimator `alpha = arcsin(m·b / (x·l))`; independent of the
/// focal length by construction.
pub fn validation_alpha(v: &ValidationInput) -> Result<Angle, GeometryError> {
    for (name, value) in [("x", v.x), ("b", v.b), ("l", v.l)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(GeometryError::Domain { name, value });
        }
    }
    if !v.m.is_finite() || v.m < 0.0 {
        return Err(GeometryError::Domain {
            name: "m",
            value: v.m,
        });
    }
    let ratio = v.m * v.b / (v.x * v.l);
    if ratio > 1.0 + UNIT_CLIP_SLACK {
        return Err(GeometryError::InvalidValidationInput { ratio });
    }
    Ok(Angle::from_radians(ratio.min(1.0).asin()))
}
