//! Per-frame swing estimates, threshold classification, and alarm events.
//!
//! Operational thresholds: swing angles above the alarm threshold (default
//! 10 degrees) are dangerous; above the declared maximum (default 20 degrees)
//! the estimate leaves the model's working range and is reported as
//! out-of-range rather than clamped. Alarm events fire on transitions into
//! the alarm state, not on every alarmed frame.

use crate::angle::Angle;
use crate::geometry::{self, GeometryError};
use crate::reference_frame::{to_image_point, PixelDetection, ReferenceFrame};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    /// Danger threshold; crossing it flags the frame.
    pub alarm: Angle,
    /// Declared maximum of the estimation range.
    pub max_angle: Angle,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            alarm: Angle::from_degrees(10.0),
            max_angle: Angle::from_degrees(20.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwingStatus {
    Normal,
    Alarm,
    OutOfRange,
}

impl SwingStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SwingStatus::Normal => "normal",
            SwingStatus::Alarm => "alarm",
            SwingStatus::OutOfRange => "out_of_range",
        }
    }
}

/// One frame's swing estimate with its classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwingEstimate {
    pub frame_id: u64,
    pub alpha: Angle,
    pub m: f64,
    pub theta: Angle,
    pub status: SwingStatus,
}

/// Classifies a swing angle against the thresholds. Exactly one status
/// applies: normal (≤ alarm), alarm (above alarm, up to the max), or
/// out-of-range (above the max).
pub fn classify(alpha: Angle, thresholds: &ThresholdConfig) -> SwingStatus {
    if alpha.radians() > thresholds.max_angle.radians() {
        SwingStatus::OutOfRange
    } else if alpha.radians() > thresholds.alarm.radians() {
        SwingStatus::Alarm
    } else {
        SwingStatus::Normal
    }
}

/// Estimates one detection's swing angle and classifies it.
pub fn estimate_detection(
    d: &PixelDetection,
    rf: &ReferenceFrame,
    beta: Angle,
    h: f64,
    thresholds: &ThresholdConfig,
) -> Result<SwingEstimate, GeometryError> {
    let point = to_image_point(d, rf);
    let alpha = geometry::estimate_alpha(point.m, point.theta, beta, h)?;
    Ok(SwingEstimate {
        frame_id: d.frame_id,
        alpha,
        m: point.m,
        theta: point.theta,
        status: classify(alpha, thresholds),
    })
}

/// Estimates every frame, preserving input order.
pub fn estimate_frames(
    detections: &[PixelDetection],
    rf: &ReferenceFrame,
    beta: Angle,
    h: f64,
    thresholds: &ThresholdConfig,
) -> Result<Vec<SwingEstimate>, GeometryError> {
    detections
        .iter()
        .map(|d| estimate_detection(d, rf, beta, h, thresholds))
        .collect()
}

/// Frame ids at which the stream enters the alarm state. The stream starts
/// notionally normal, so an alarmed first frame counts as a transition.
pub fn alarm_transitions(estimates: &[SwingEstimate]) -> Vec<u64> {
    let mut previous = SwingStatus::Normal;
    let mut transitions = Vec::new();
    for e in estimates {
        if e.status == SwingStatus::Alarm && previous != SwingStatus::Alarm {
            transitions.push(e.frame_id);
        }
        previous = e.status;
    }
    transitions
}

/// Stream summary mirroring what an operator wants at a glance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub frames: usize,
    pub alarm_frames: usize,
    pub out_of_range_frames: usize,
    pub max_alpha: Angle,
    /// Share of frames at or below 5 degrees.
    pub fraction_at_most_5deg: f64,
}

pub fn summarize(estimates: &[SwingEstimate]) -> EstimateSummary {
    let frames = estimates.len();
    let alarm_frames = estimates
        .iter()
        .filter(|e| e.status == SwingStatus::Alarm)
        .count();
    let out_of_range_frames = estimates
        .iter()
        .filter(|e| e.status == SwingStatus::OutOfRange)
        .count();
    let max_alpha = estimates
        .iter()
        .map(|e| e.alpha)
        .fold(Angle::ZERO, |acc, a| if a > acc { a } else { acc });
    let below = estimates
        .iter()
        .filter(|e| e.alpha.degrees() <= 5.0)
        .count();
    EstimateSummary {
        frames,
        alarm_frames,
        out_of_range_frames,
        max_alpha,
        fraction_at_most_5deg: if frames == 0 {
            0.0
        } else {
            below as f64 / frames as f64
        },
    }
}

/// Comparison row between the projection-based estimate and the width-based
/// cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationComparison {
    pub frame_id: u64,
    pub alpha_hat: Angle,
    pub alpha_tilde: Angle,
    pub abs_diff: Angle,
}

impl ValidationComparison {
    pub fn new(frame_id: u64, alpha_hat: Angle, alpha_tilde: Angle) -> Self {
        ValidationComparison {
            frame_id,
            alpha_hat,
            alpha_tilde,
            abs_diff: Angle::from_radians((alpha_hat.radians() - alpha_tilde.radians()).abs()),
        }
    }
}

/// Line-delimited event records for the monitor stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum MonitorEvent {
    #[serde(rename = "FRAME")]
    Frame {
        frame_id: u64,
        alpha_deg: f64,
        status: SwingStatus,
    },
    #[serde(rename = "ALARM")]
    Alarm {
        frame_id: u64,
        alpha_deg: f64,
        threshold_deg: f64,
    },
    #[serde(rename = "SUMMARY")]
    Summary {
        frames: usize,
        alarm_events: usize,
        alarm_frames: usize,
        out_of_range_frames: usize,
        max_alpha_deg: f64,
    },
}
