//! `calibrate`: dataset + intrinsics in, fitted parameters and reports out.
//!
//! Writes into the output directory:
//! - `params.json` — the parameter file every downstream command consumes
//! - `calibration_report.json` — iteration trace, deltas, warnings
//! - `trace.csv` — per-iteration estimates for convergence plots
//! - `alpha_estimates.csv` — per-frame swing angles at convergence
//! - `alpha_histogram.csv` — half-degree histogram of those angles

use crate::config::{
    load_json, save_json, CalibrationFile, IntrinsicsFile, ParamsFile,
};
use crate::errors::{write_failed, CliError};
use clap::Args;
use grabwatch::angle::Angle;
use grabwatch::calibration::{calibrate, CalibrationReport};
use grabwatch::geometry::ImagePoint;
use grabwatch::ingestion::{self, RejectedRow};
use grabwatch::reference_frame::{
    fit_reference_angle, to_image_point, FittedReference, ReferenceFrame, ReferenceFrameError,
};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct CalibrateArgs {
    /// Detection dataset (CSV or JSONL)
    #[arg(long)]
    pub dataset: PathBuf,
    /// Force the dataset format instead of inferring from the extension
    #[arg(long)]
    pub format: Option<String>,
    /// Camera intrinsics config (JSON)
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Calibration config (JSON); stock defaults when omitted
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Output directory for params and reports
    #[arg(long, default_value = "calibration_out")]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    beta_rad: f64,
    beta_deg: f64,
    sigma_sq_rad2: f64,
    sigma_deg: f64,
    iterations: usize,
    converged: bool,
    final_abs_delta_beta: f64,
    final_abs_delta_sigma_sq: f64,
    final_rel_delta_sigma_sq: f64,
    clamped_infeasible: bool,
    n_observations: usize,
    n_rejected_rows: usize,
    n_out_of_bounds: usize,
    reference_points_used: usize,
    reference_points_excluded: usize,
    reference_median_residual: f64,
    reference_angle_phi_rad: f64,
    warnings: &'a [String],
    trace: &'a [grabwatch::calibration::IterationState],
}

pub fn run(args: &CalibrateArgs) -> Result<(), CliError> {
    let intr_file: IntrinsicsFile = load_json(&args.intrinsics)?;
    let intrinsics = intr_file.to_intrinsics()?;
    let calib_file: CalibrationFile = match &args.calibration {
        Some(p) => load_json(p)?,
        None => CalibrationFile::default(),
    };

    let ds = super::load_dataset_arg(
        &args.dataset,
        args.format.as_deref(),
        intr_file.image_width,
        intr_file.image_height,
    )?;
    let detections = ingestion::to_pixel_detections(&ds);
    let principal = intr_file.principal_point();

    // Optional split: fit the reference line on the leading fraction, then
    // calibrate on the rest. Default is same-data for both.
    let holdout = calib_file.reference_holdout_fraction.clamp(0.0, 0.9);
    let split = ((detections.len() as f64) * holdout).ceil() as usize;
    let (fit_slice, calib_slice) = if split > 0 && split < detections.len() {
        (&detections[..split], &detections[split..])
    } else {
        (&detections[..], &detections[..])
    };

    // A dataset parked entirely at the principal point has no reference
    // direction, but every such observation still calibrates (m = 0 carries
    // no theta); fall back to phi = 0 and flag it.
    let fitted: FittedReference = match fit_reference_angle(fit_slice, principal) {
        Ok(fitted) => fitted,
        Err(ReferenceFrameError::DegenerateData) => {
            eprintln!(
                "warning: all detections sit at the principal point; reference angle fixed to 0"
            );
            FittedReference {
                frame: ReferenceFrame {
                    principal_x: principal.0,
                    principal_y: principal.1,
                    reference_angle_phi: Angle::ZERO,
                },
                median_residual: 0.0,
                points_used: 0,
                points_excluded: fit_slice.len(),
            }
        }
        Err(e) => return Err(e.into()),
    };
    let points: Vec<ImagePoint> = calib_slice
        .iter()
        .map(|d| to_image_point(d, &fitted.frame))
        .collect();

    let h = intrinsics.focal_length_px();
    let report = calibrate(&points, h, &calib_file.to_config())?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| write_failed(&args.out_dir, e))?;

    let params = ParamsFile {
        beta_rad: report.params.beta.radians(),
        sigma_sq_rad2: report.params.sigma_sq,
        h_px: h,
        principal_x: fitted.frame.principal_x,
        principal_y: fitted.frame.principal_y,
        reference_angle_phi_rad: fitted.frame.reference_angle_phi.radians(),
        image_width: intr_file.image_width,
        image_height: intr_file.image_height,
        dataset_fingerprint: ingestion::dataset_fingerprint(&ds.records),
    };
    save_json(&params, &args.out_dir.join("params.json"))?;

    let report_file = ReportFile {
        beta_rad: report.params.beta.radians(),
        beta_deg: report.params.beta.degrees(),
        sigma_sq_rad2: report.params.sigma_sq,
        sigma_deg: report.params.sigma_sq.sqrt().to_degrees(),
        iterations: report.iterations,
        converged: report.converged,
        final_abs_delta_beta: report.final_abs_delta_beta,
        final_abs_delta_sigma_sq: report.final_abs_delta_sigma_sq,
        final_rel_delta_sigma_sq: report.final_rel_delta_sigma_sq,
        clamped_infeasible: report.clamped_infeasible,
        n_observations: points.len(),
        n_rejected_rows: ds.rejects.len(),
        n_out_of_bounds: ds.out_of_bounds.len(),
        reference_points_used: fitted.points_used,
        reference_points_excluded: fitted.points_excluded,
        reference_median_residual: fitted.median_residual,
        reference_angle_phi_rad: fitted.frame.reference_angle_phi.radians(),
        warnings: &report.warnings,
        trace: &report.trace,
    };
    save_json(&report_file, &args.out_dir.join("calibration_report.json"))?;

    write_trace_csv(&report, &args.out_dir.join("trace.csv"))?;
    write_alpha_csv(&report, calib_slice, &args.out_dir.join("alpha_estimates.csv"))?;
    write_histogram_csv(&report, &args.out_dir.join("alpha_histogram.csv"))?;
    write_rejects_csv(&ds.rejects, &args.out_dir.join("rejects.csv"))?;

    println!(
        "calibrated on {} frames: beta = {:.4} deg, sigma = {:.4} deg ({} iterations, converged = {})",
        points.len(),
        report.params.beta.degrees(),
        report.params.sigma_sq.sqrt().to_degrees(),
        report.iterations,
        report.converged,
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn write_trace_csv(report: &CalibrationReport, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::input(format!("failed to write {}: {e}", path.display())))?;
    w.write_record(["t", "beta_rad", "sigma_sq_rad2", "abs_delta_beta", "abs_delta_sigma_sq"])
        .map_err(|e| CliError::input(e.to_string()))?;
    for (t, s) in report.trace.iter().enumerate() {
        let (db, dsq) = if t == 0 {
            (String::new(), String::new())
        } else {
            let prev = &report.trace[t - 1];
            (
                (s.beta_rad - prev.beta_rad).abs().to_string(),
                (s.sigma_sq - prev.sigma_sq).abs().to_string(),
            )
        };
        w.write_record(&[
            t.to_string(),
            s.beta_rad.to_string(),
            s.sigma_sq.to_string(),
            db,
            dsq,
        ])
        .map_err(|e| CliError::input(e.to_string()))?;
    }
    w.flush().map_err(|e| write_failed(path, e))
}

fn write_alpha_csv(
    report: &CalibrationReport,
    detections: &[grabwatch::reference_frame::PixelDetection],
    path: &Path,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::input(format!("failed to write {}: {e}", path.display())))?;
    w.write_record(["frame_id", "alpha_rad", "alpha_deg"])
        .map_err(|e| CliError::input(e.to_string()))?;
    for (d, a) in detections.iter().zip(&report.alphas) {
        w.write_record(&[
            d.frame_id.to_string(),
            a.radians().to_string(),
            a.degrees().to_string(),
        ])
        .map_err(|e| CliError::input(e.to_string()))?;
    }
    w.flush().map_err(|e| write_failed(path, e))
}

fn write_rejects_csv(rejects: &[RejectedRow], path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::input(format!("failed to write {}: {e}", path.display())))?;
    w.write_record(["line", "reason"])
        .map_err(|e| CliError::input(e.to_string()))?;
    for r in rejects {
        w.write_record(&[r.line.to_string(), r.reason.clone()])
            .map_err(|e| CliError::input(e.to_string()))?;
    }
    w.flush().map_err(|e| write_failed(path, e))
}

/// Half-degree histogram of the recovered swing angles.
fn write_histogram_csv(report: &CalibrationReport, path: &Path) -> Result<(), CliError> {
    const BIN_DEG: f64 = 0.5;
    let max_deg = report
        .alphas
        .iter()
        .map(|a| a.degrees())
        .fold(0.0f64, f64::max);
    let bins = ((max_deg / BIN_DEG).floor() as usize) + 1;
    let mut counts = vec![0usize; bins];
    for a in &report.alphas {
        let idx = ((a.degrees() / BIN_DEG).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::input(format!("failed to write {}: {e}", path.display())))?;
    w.write_record(["bin_start_deg", "bin_end_deg", "count"])
        .map_err(|e| CliError::input(e.to_string()))?;
    for (i, count) in counts.iter().enumerate() {
        w.write_record(&[
            (i as f64 * BIN_DEG).to_string(),
            ((i + 1) as f64 * BIN_DEG).to_string(),
            count.to_string(),
        ])
        .map_err(|e| CliError::input(e.to_string()))?;
    }
    w.flush().map_err(|e| write_failed(path, e))
}
