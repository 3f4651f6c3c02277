//! `estimate`: per-frame swing angles from a dataset and a params file.

use crate::config::{load_json, IntrinsicsFile, ParamsFile, ThresholdFile};
use crate::errors::{write_failed, CliError};
use clap::Args;
use grabwatch::ingestion;
use grabwatch::monitor::{estimate_frames, summarize, SwingEstimate};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Args)]
pub struct EstimateArgs {
    /// Detection dataset (CSV or JSONL)
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Params file produced by `calibrate`
    #[arg(long)]
    pub params: PathBuf,
    /// Optional intrinsics config; image dimensions must match the params file
    #[arg(long)]
    pub intrinsics: Option<PathBuf>,
    /// Optional thresholds config (JSON)
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    /// Output CSV of per-frame estimates
    #[arg(long, default_value = "estimates.csv")]
    pub out: PathBuf,
}

pub fn run(args: &EstimateArgs) -> Result<(), CliError> {
    let params: ParamsFile = load_json(&args.params)?;
    if let Some(intr_path) = &args.intrinsics {
        let intr: IntrinsicsFile = load_json(intr_path)?;
        if intr.image_width != params.image_width || intr.image_height != params.image_height {
            return Err(CliError::input(format!(
                "config mismatch: intrinsics are {}x{} but params were fitted at {}x{}",
                intr.image_width, intr.image_height, params.image_width, params.image_height
            )));
        }
    }
    let thresholds = match &args.thresholds {
        Some(p) => load_json::<ThresholdFile>(p)?,
        None => ThresholdFile::default(),
    }
    .to_config();

    let ds = super::load_dataset_arg(
        &args.dataset,
        args.format.as_deref(),
        params.image_width,
        params.image_height,
    )?;
    let detections = ingestion::to_pixel_detections(&ds);

    let started = Instant::now();
    let estimates = estimate_frames(
        &detections,
        &params.reference_frame(),
        params.beta(),
        params.h_px,
        &thresholds,
    )?;
    let elapsed = started.elapsed().as_secs_f64();

    write_estimates_csv(&estimates, &args.out)?;

    let summary = summarize(&estimates);
    let fps = if elapsed > 0.0 {
        summary.frames as f64 / elapsed
    } else {
        f64::INFINITY
    };
    println!(
        "estimated {} frames in {:.3} s ({:.0} frames/s)",
        summary.frames, elapsed, fps
    );
    println!(
        "max alpha = {:.3} deg; {:.1}% of frames at or below 5 deg; {} alarm frames, {} out of range",
        summary.max_alpha.degrees(),
        summary.fraction_at_most_5deg * 100.0,
        summary.alarm_frames,
        summary.out_of_range_frames,
    );
    Ok(())
}

pub fn write_estimates_csv(estimates: &[SwingEstimate], path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::input(format!("failed to write {}: {e}", path.display())))?;
    w.write_record(["frame_id", "m_px", "theta_rad", "alpha_rad", "alpha_deg", "status"])
        .map_err(|e| CliError::input(e.to_string()))?;
    for e in estimates {
        w.write_record(&[
            e.frame_id.to_string(),
            e.m.to_string(),
            e.theta.radians().to_string(),
            e.alpha.radians().to_string(),
            e.alpha.degrees().to_string(),
            e.status.as_str().to_string(),
        ])
        .map_err(|e| CliError::input(e.to_string()))?;
    }
    w.flush().map_err(|e| write_failed(path, e))
}
