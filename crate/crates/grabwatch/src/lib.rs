//! Swing-angle estimation for crane payloads watched by a single overhead camera.
//!
//! The crate models the projection of a swinging payload onto the image plane of
//! a slightly tilted pinhole camera, recovers the per-frame swing angle from the
//! payload's pixel position, and estimates the two unknown installation
//! parameters (camera tilt and swing variance) from a detection stream with an
//! iterative method-of-moments procedure. Supporting pieces: reference-line
//! fitting for the image-plane coordinate frame, a seeded Monte Carlo study
//! harness, detection-file ingestion, and threshold-based monitoring.
//!
//! Modules:
//! - [`angle`]: radian-backed angle type, degree conversion, wrapping.
//! - [`geometry`]: the projection model and its inverses.
//! - [`reference_frame`]: pixel detections to polar image coordinates.
//! - [`calibration`]: iterative moment estimator for tilt and swing variance.
//! - [`simulator`]: seeded observation generator and replication studies.
//! - [`ingestion`]: CSV/JSONL detection datasets and rope-length joins.
//! - [`monitor`]: per-frame estimates, alarm thresholds, event records.

pub mod angle;
pub mod calibration;
pub mod geometry;
pub mod ingestion;
pub mod monitor;
pub mod reference_frame;
pub mod simulator;

pub use angle::Angle;
pub use calibration::{calibrate, CalibrationConfig, CalibrationReport, ModelParams};
pub use geometry::{CameraIntrinsics, GeometryError, ImagePoint, SwingState, ValidationInput};
pub use monitor::{SwingEstimate, SwingStatus, ThresholdConfig};
pub use reference_frame::{PixelDetection, ReferenceFrame};
