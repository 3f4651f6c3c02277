//! Plane angles stored in radians.
//!
//! Degrees exist only at the boundaries (config files, CLI output); everything
//! internal converts once and stays in radians.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Wraps an angle in radians into the half-open interval (−π, π].
pub fn wrap_signed(radians: f64) -> f64 {
    let r = radians.rem_euclid(TAU); // [0, 2π)
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// A plane angle in radians.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn from_radians(radians: f64) -> Self {
        Angle(radians)
    }

    pub fn from_degrees(degrees: f64) -> Self {
        Angle(degrees.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    pub fn sin(self) -> f64 {
        self.0.sin()
    }

    pub fn cos(self) -> f64 {
        self.0.cos()
    }

    pub fn tan(self) -> f64 {
        self.0.tan()
    }

    pub fn abs(self) -> Angle {
        Angle(self.0.abs())
    }

    /// Wraps into (−π, π].
    pub fn wrapped_signed(self) -> Angle {
        Angle(wrap_signed(self.0))
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}
