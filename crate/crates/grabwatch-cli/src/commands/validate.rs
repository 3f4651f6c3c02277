//! `validate`: compares the projection-based estimate against the width-based
//! cross-check `alpha = arcsin(m·b/(x·l))`, which needs no focal length.
//!
//! Width observations come from a sidecar CSV (`frame_id,width_px`); rope
//! lengths from the dataset itself or an optional rope sidecar. Frames
//! lacking either are skipped with a per-frame reason.

use crate::config::{load_json, ParamsFile};
use crate::errors::{read_failed, write_failed, CliError};
use clap::Args;
use grabwatch::geometry::{estimate_alpha, validation_alpha, GeometryError, ValidationInput};
use grabwatch::ingestion::{self};
use grabwatch::monitor::ValidationComparison;
use grabwatch::reference_frame::to_image_point;
use grabwatch::simulator::quantile;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct ValidateArgs {
    /// Detection dataset (CSV or JSONL)
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Params file produced by `calibrate`
    #[arg(long)]
    pub params: PathBuf,
    /// True payload width in metres
    #[arg(long)]
    pub grab_width_m: f64,
    /// CSV of per-frame observed pixel widths (`frame_id,width_px`)
    #[arg(long)]
    pub widths: PathBuf,
    /// Optional rope sidecar CSV (`frame_id,rope_length_m`)
    #[arg(long)]
    pub rope_file: Option<PathBuf>,
    /// Output comparison CSV
    #[arg(long, default_value = "validation.csv")]
    pub out: PathBuf,
}

fn load_widths(path: &Path) -> Result<BTreeMap<u64, f64>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| read_failed(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::input(e.to_string()))?
        .clone();
    let frame_idx = headers
        .iter()
        .position(|h| h == "frame_id")
        .ok_or_else(|| CliError::input("widths file is missing column 'frame_id'"))?;
    let width_idx = headers
        .iter()
        .position(|h| h == "width_px")
        .ok_or_else(|| CliError::input("widths file is missing column 'width_px'"))?;
    let mut map = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::input(e.to_string()))?;
        let line = i + 2;
        let frame_id: u64 = record
            .get(frame_idx)
            .unwrap_or("")
            .parse()
            .map_err(|_| CliError::input(format!("widths line {line}: bad frame_id")))?;
        let width: f64 = record
            .get(width_idx)
            .unwrap_or("")
            .parse()
            .map_err(|_| CliError::input(format!("widths line {line}: bad width_px")))?;
        map.insert(frame_id, width);
    }
    Ok(map)
}

pub fn run(args: &ValidateArgs) -> Result<(), CliError> {
    if !(args.grab_width_m.is_finite() && args.grab_width_m > 0.0) {
        return Err(CliError::input(format!(
            "grab width must be positive, got {}",
            args.grab_width_m
        )));
    }
    let params: ParamsFile = load_json(&args.params)?;
    let mut ds = super::load_dataset_arg(
        &args.dataset,
        args.format.as_deref(),
        params.image_width,
        params.image_height,
    )?;
    if let Some(rope_path) = &args.rope_file {
        let ropes = ingestion::load_rope_file(rope_path)?;
        let (joined, summary) = ingestion::join_rope_lengths(ds, &ropes);
        ds = joined;
        eprintln!(
            "rope join: {} matched, {} frames without rope length, {} unmatched rope entries",
            summary.matched,
            summary.missing.len(),
            summary.unmatched_rope_entries
        );
    }
    let widths = load_widths(&args.widths)?;
    let rf = params.reference_frame();
    let detections = ingestion::to_pixel_detections(&ds);

    let mut comparisons = Vec::new();
    let mut skips: Vec<(u64, String)> = Vec::new();
    for d in &detections {
        let point = to_image_point(d, &rf);
        let Some(&x) = widths.get(&d.frame_id) else {
            skips.push((d.frame_id, "missing:width".to_string()));
            continue;
        };
        let Some(l) = d.rope_length_m else {
            skips.push((d.frame_id, "missing:rope_length".to_string()));
            continue;
        };
        let alpha_hat = estimate_alpha(point.m, point.theta, params.beta(), params.h_px)?;
        let input = ValidationInput {
            m: point.m,
            x,
            b: args.grab_width_m,
            l,
        };
        match validation_alpha(&input) {
            Ok(alpha_tilde) => {
                comparisons.push(ValidationComparison::new(d.frame_id, alpha_hat, alpha_tilde))
            }
            Err(GeometryError::Domain { name, .. }) => {
                skips.push((d.frame_id, format!("domain:{name}")));
            }
            Err(GeometryError::InvalidValidationInput { .. }) => {
                skips.push((d.frame_id, "domain:arcsin".to_string()));
            }
            Err(e) => return Err(e.into()),
        }
    }

    if comparisons.is_empty() {
        return Err(CliError::validation(format!(
            "no frame could be validated: {} skipped ({})",
            skips.len(),
            summarize_skips(&skips)
        )));
    }

    write_comparison_csv(&comparisons, &args.out)?;

    let mut diffs: Vec<f64> = comparisons.iter().map(|c| c.abs_diff.degrees()).collect();
    diffs.sort_by(f64::total_cmp);
    println!(
        "validated {} frames ({} skipped): |alpha_hat - alpha_tilde| deg: median = {:.3}, q3 = {:.3}, max = {:.3}",
        comparisons.len(),
        skips.len(),
        quantile(&diffs, 0.5),
        quantile(&diffs, 0.75),
        diffs.last().copied().unwrap_or(0.0),
    );
    for (frame, reason) in &skips {
        eprintln!("skipped frame {frame}: {reason}");
    }
    Ok(())
}

fn summarize_skips(skips: &[(u64, String)]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, reason) in skips {
        *counts.entry(reason.as_str()).or_default() += 1;
    }
    counts
        .iter()
        .map(|(reason, count)| format!("{reason} x{count}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn write_comparison_csv(rows: &[ValidationComparison], path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::input(format!("failed to write {}: {e}", path.display())))?;
    w.write_record(["frame_id", "alpha_hat_deg", "alpha_tilde_deg", "abs_diff_deg"])
        .map_err(|e| CliError::input(e.to_string()))?;
    for c in rows {
        w.write_record(&[
            c.frame_id.to_string(),
            c.alpha_hat.degrees().to_string(),
            c.alpha_tilde.degrees().to_string(),
            c.abs_diff.degrees().to_string(),
        ])
        .map_err(|e| CliError::input(e.to_string()))?;
    }
    w.flush().map_err(|e| write_failed(path, e))
}
