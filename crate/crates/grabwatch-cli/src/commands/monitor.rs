//! `monitor`: replays a dataset as a line-delimited event stream.
//!
//! One FRAME event per frame, an ALARM event on each transition into the
//! alarm state (or on every alarmed frame with `--per-frame-alarms`), and a
//! closing SUMMARY event. `--realtime` paces the replay at the source's
//! native 9 frames per second.

use crate::config::{load_json, ParamsFile, ThresholdFile};
use crate::errors::CliError;
use clap::Args;
use grabwatch::angle::Angle;
use grabwatch::ingestion;
use grabwatch::monitor::{
    classify, estimate_frames, summarize, MonitorEvent, SwingStatus,
};
use std::io::Write;
use std::path::PathBuf;

const NATIVE_FPS: f64 = 9.0;

#[derive(Args)]
pub struct MonitorArgs {
    /// Detection dataset (CSV or JSONL)
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Params file produced by `calibrate`
    #[arg(long)]
    pub params: PathBuf,
    /// Optional thresholds config (JSON)
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    /// Emit an ALARM event for every alarmed frame, not just transitions
    #[arg(long)]
    pub per_frame_alarms: bool,
    /// Pace the replay at the native frame rate instead of full speed
    #[arg(long)]
    pub realtime: bool,
    /// Classify on a centred moving median of this many frames (odd; 1 = off)
    #[arg(long, default_value_t = 1)]
    pub median_window: usize,
}

/// Centred moving median; the window shrinks at the stream edges.
fn moving_median(values: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return values.to_vec();
    }
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            let mut w: Vec<f64> = values[lo..hi].to_vec();
            w.sort_by(f64::total_cmp);
            w[(w.len() - 1) / 2]
        })
        .collect()
}

pub fn run(args: &MonitorArgs) -> Result<(), CliError> {
    if args.median_window == 0 || args.median_window.is_multiple_of(2) {
        return Err(CliError::input(format!(
            "median window must be odd and at least 1, got {}",
            args.median_window
        )));
    }
    let params: ParamsFile = load_json(&args.params)?;
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
    let mut estimates = estimate_frames(
        &detections,
        &params.reference_frame(),
        params.beta(),
        params.h_px,
        &thresholds,
    )?;

    if args.median_window > 1 {
        let alphas: Vec<f64> = estimates.iter().map(|e| e.alpha.radians()).collect();
        for (e, smoothed) in estimates.iter_mut().zip(moving_median(&alphas, args.median_window)) {
            e.status = classify(Angle::from_radians(smoothed), &thresholds);
        }
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut previous = SwingStatus::Normal;
    let mut alarm_events = 0usize;
    for e in &estimates {
        emit(&mut out, &MonitorEvent::Frame {
            frame_id: e.frame_id,
            alpha_deg: e.alpha.degrees(),
            status: e.status,
        })?;
        let rising = e.status == SwingStatus::Alarm && previous != SwingStatus::Alarm;
        if (args.per_frame_alarms && e.status == SwingStatus::Alarm) || (!args.per_frame_alarms && rising) {
            alarm_events += 1;
            emit(&mut out, &MonitorEvent::Alarm {
                frame_id: e.frame_id,
                alpha_deg: e.alpha.degrees(),
                threshold_deg: thresholds.alarm.degrees(),
            })?;
        }
        previous = e.status;
        if args.realtime {
            std::thread::sleep(std::time::Duration::from_secs_f64(1.0 / NATIVE_FPS));
        }
    }

    let summary = summarize(&estimates);
    emit(&mut out, &MonitorEvent::Summary {
        frames: summary.frames,
        alarm_events,
        alarm_frames: summary.alarm_frames,
        out_of_range_frames: summary.out_of_range_frames,
        max_alpha_deg: summary.max_alpha.degrees(),
    })?;
    Ok(())
}

fn emit<W: Write>(out: &mut W, event: &MonitorEvent) -> Result<(), CliError> {
    let line = serde_json::to_string(event)
        .map_err(|e| CliError::input(format!("event serialization failed: {e}")))?;
    writeln!(out, "{line}").map_err(|e| CliError::input(format!("stdout write failed: {e}")))
}
