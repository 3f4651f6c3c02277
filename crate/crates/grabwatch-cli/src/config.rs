//! On-disk config and parameter file schemas (JSON).

use crate::errors::{read_failed, write_failed, CliError};
use grabwatch::angle::Angle;
use grabwatch::calibration::CalibrationConfig;
use grabwatch::geometry::CameraIntrinsics;
use grabwatch::monitor::ThresholdConfig;
use grabwatch::reference_frame::ReferenceFrame;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| read_failed(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("failed to parse {}: {e}", path.display())))
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("failed to serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| write_failed(path, e))
}

/// Camera description: `{focal_length_mm, sensor_diagonal_mm, image_width,
/// image_height}` with an optional principal-point override.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntrinsicsFile {
    pub focal_length_mm: f64,
    pub sensor_diagonal_mm: f64,
    pub image_width: u32,
    pub image_height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub principal_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub principal_y: Option<f64>,
}

impl IntrinsicsFile {
    pub fn to_intrinsics(&self) -> Result<CameraIntrinsics, CliError> {
        CameraIntrinsics::new(
            self.focal_length_mm,
            self.sensor_diagonal_mm,
            self.image_width,
            self.image_height,
        )
        .map_err(|e| CliError::input(e.to_string()))
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (
            self.principal_x
                .unwrap_or(f64::from(self.image_width) / 2.0),
            self.principal_y
                .unwrap_or(f64::from(self.image_height) / 2.0),
        )
    }
}

/// Calibration settings; every field has the stock default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationFile {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub initial_beta_deg: f64,
    pub clamp_infeasible: bool,
    /// When positive, the leading fraction of frames fits the reference line
    /// and the remainder calibrates the parameters; 0 uses all frames for both.
    pub reference_holdout_fraction: f64,
}

impl Default for CalibrationFile {
    fn default() -> Self {
        CalibrationFile {
            epsilon: 1e-6,
            max_iterations: 100,
            initial_beta_deg: 0.0,
            clamp_infeasible: false,
            reference_holdout_fraction: 0.0,
        }
    }
}

impl CalibrationFile {
    pub fn to_config(&self) -> CalibrationConfig {
        CalibrationConfig {
            epsilon: self.epsilon,
            max_iterations: self.max_iterations,
            initial_beta: Angle::from_degrees(self.initial_beta_deg),
            clamp_infeasible: self.clamp_infeasible,
        }
    }
}

/// Alarm thresholds in degrees.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdFile {
    pub alarm_deg: f64,
    pub max_deg: f64,
}

impl Default for ThresholdFile {
    fn default() -> Self {
        ThresholdFile {
            alarm_deg: 10.0,
            max_deg: 20.0,
        }
    }
}

impl ThresholdFile {
    pub fn to_config(&self) -> ThresholdConfig {
        ThresholdConfig {
            alarm: Angle::from_degrees(self.alarm_deg),
            max_angle: Angle::from_degrees(self.max_deg),
        }
    }
}

/// Output of `calibrate`, consumed by `estimate`, `validate`, and `monitor`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub beta_rad: f64,
    pub sigma_sq_rad2: f64,
    pub h_px: f64,
    pub principal_x: f64,
    pub principal_y: f64,
    pub reference_angle_phi_rad: f64,
    pub image_width: u32,
    pub image_height: u32,
    pub dataset_fingerprint: String,
}

impl ParamsFile {
    pub fn reference_frame(&self) -> ReferenceFrame {
        ReferenceFrame {
            principal_x: self.principal_x,
            principal_y: self.principal_y,
            reference_angle_phi: Angle::from_radians(self.reference_angle_phi_rad),
        }
    }

    pub fn beta(&self) -> Angle {
        Angle::from_radians(self.beta_rad)
    }
}

/// Study settings for `simulate`, angles in degrees.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateFile {
    pub h_px: f64,
    pub beta_true_deg: f64,
    pub sigma_true_deg: f64,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
}

impl SimulateFile {
    pub fn to_config(&self) -> grabwatch::simulator::SimulationConfig {
        grabwatch::simulator::SimulationConfig {
            h: self.h_px,
            beta_true: Angle::from_degrees(self.beta_true_deg),
            sigma_true: Angle::from_degrees(self.sigma_true_deg),
            n: self.n,
            replications: self.replications,
            seed: self.seed,
            n_grid: self.n_grid.clone(),
        }
    }
}
