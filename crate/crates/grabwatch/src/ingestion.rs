//! Detection datasets on disk: CSV/JSONL loading with row validation, a rope
//! length sidecar join, and canonical re-serialization.
//!
//! The ingestion boundary is structured detections (one row per frame with
//! the bounding-box centre), not video: whatever produced them is upstream of
//! this crate. Malformed rows are collected into a rejects report instead of
//! aborting, up to a configurable failure threshold.
//!
//! Canonical CSV columns:
//! `frame_id,timestamp,center_x,center_y,bbox_w,bbox_h,confidence,rope_length_m`.
//! JSONL uses the same keys, one object per line. All emitted files are UTF-8
//! with LF line endings.

use crate::reference_frame::PixelDetection;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

pub const CSV_COLUMNS: [&str; 8] = [
    "frame_id",
    "timestamp",
    "center_x",
    "center_y",
    "bbox_w",
    "bbox_h",
    "confidence",
    "rope_length_m",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown dataset format '{0}' (expected csv or jsonl)")]
    UnknownFormat(String),
    #[error("missing required column '{0}'")]
    MissingColumn(&'static str),
    #[error("{rejected} of {total} rows rejected, above the {limit:.0}% failure threshold")]
    LoadFailure {
        rejected: usize,
        total: usize,
        limit: f64,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("rope file line {line}: {reason}")]
    RopeParse { line: u64, reason: String },
    #[error("conflicting rope lengths for frames {0:?}")]
    JoinConflict(Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Jsonl,
}

impl FromStr for DatasetFormat {
    type Err = IngestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DatasetFormat::Csv),
            "jsonl" | "ndjson" => Ok(DatasetFormat::Jsonl),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

impl DatasetFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> DatasetFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") => {
                DatasetFormat::Jsonl
            }
            _ => DatasetFormat::Csv,
        }
    }
}

/// One validated detection row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub frame_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub center_x: f64,
    pub center_y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rope_length_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedRow {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    /// Accepted records, sorted by frame id.
    pub records: Vec<DetectionRecord>,
    pub image_width: u32,
    pub image_height: u32,
    pub source: String,
    pub rejects: Vec<RejectedRow>,
    /// Frames whose centre falls outside the image bounds; kept, not dropped.
    pub out_of_bounds: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub image_width: u32,
    pub image_height: u32,
    /// Loading fails outright when more than this fraction of rows is rejected.
    pub max_reject_fraction: f64,
}

impl LoadOptions {
    pub fn new(image_width: u32, image_height: u32) -> Self {
        LoadOptions {
            image_width,
            image_height,
            max_reject_fraction: 0.5,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_required_f64(
    raw: Option<&str>,
    field: &'static str,
) -> Result<f64, String> {
    let raw = raw.map(str::trim).unwrap_or("");
    if raw.is_empty() {
        return Err(format!("missing:{field}"));
    }
    let value: f64 = raw.parse().map_err(|_| format!("parse:{field}"))?;
    if !value.is_finite() {
        return Err(format!("range:{field}"));
    }
    Ok(value)
}

fn parse_optional_f64(
    raw: Option<&str>,
    field: &'static str,
) -> Result<Option<f64>, String> {
    let raw = raw.map(str::trim).unwrap_or("");
    if raw.is_empty() {
        return Ok(None);
    }
    let value: f64 = raw.parse().map_err(|_| format!("parse:{field}"))?;
    if !value.is_finite() {
        return Err(format!("range:{field}"));
    }
    Ok(Some(value))
}

/// Semantic checks shared by both formats; returns a reject reason on failure.
fn validate_record(rec: &DetectionRecord) -> Result<(), String> {
    for (name, value) in [("center_x", rec.center_x), ("center_y", rec.center_y)] {
        if !value.is_finite() {
            return Err(format!("range:{name}"));
        }
    }
    for (name, value) in [("bbox_w", rec.bbox_w), ("bbox_h", rec.bbox_h)] {
        if let Some(v) = value {
            if !v.is_finite() {
                return Err(format!("range:{name}"));
            }
        }
    }
    if let Some(c) = rec.confidence {
        if !c.is_finite() || !(0.0..=1.0).contains(&c) {
            return Err("range:confidence".to_string());
        }
    }
    if let Some(l) = rec.rope_length_m {
        if !l.is_finite() || l <= 0.0 {
            return Err("range:rope_length_m".to_string());
        }
    }
    if let Some(ts) = &rec.timestamp {
        if chrono::DateTime::parse_from_rfc3339(ts).is_err() {
            return Err("parse:timestamp".to_string());
        }
    }
    Ok(())
}

/// A parsed line: its 1-based line number and either a record or the reject
/// reason.
type ParsedRow = (u64, Result<DetectionRecord, String>);

fn load_csv_rows(path: &Path) -> Result<Vec<ParsedRow>, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);

    let headers = reader.headers()?.clone();
    let index_of = |name: &str| headers.iter().position(|h| h == name);
    let frame_idx = index_of("frame_id").ok_or(IngestError::MissingColumn("frame_id"))?;
    let cx_idx = index_of("center_x").ok_or(IngestError::MissingColumn("center_x"))?;
    let cy_idx = index_of("center_y").ok_or(IngestError::MissingColumn("center_y"))?;
    let ts_idx = index_of("timestamp");
    let bw_idx = index_of("bbox_w");
    let bh_idx = index_of("bbox_h");
    let conf_idx = index_of("confidence");
    let rope_idx = index_of("rope_length_m");

    let mut rows = Vec::new();
    for (i, result) in reader.records().enumerate() {
        // Header is line 1; data starts at line 2.
        let fallback_line = (i + 2) as u64;
        match result {
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(fallback_line);
                rows.push((line, Err("parse:row".to_string())));
            }
            Ok(record) => {
                let line = record
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(fallback_line);
                let parsed = (|| -> Result<DetectionRecord, String> {
                    let frame_raw = record.get(frame_idx).map(str::trim).unwrap_or("");
                    if frame_raw.is_empty() {
                        return Err("missing:frame_id".to_string());
                    }
                    let frame_id: u64 =
                        frame_raw.parse().map_err(|_| "parse:frame_id".to_string())?;
                    let center_x = parse_required_f64(record.get(cx_idx), "center_x")?;
                    let center_y = parse_required_f64(record.get(cy_idx), "center_y")?;
                    let timestamp = ts_idx
                        .and_then(|i| record.get(i))
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_string);
                    let rec = DetectionRecord {
                        frame_id,
                        timestamp,
                        center_x,
                        center_y,
                        bbox_w: parse_optional_f64(bw_idx.and_then(|i| record.get(i)), "bbox_w")?,
                        bbox_h: parse_optional_f64(bh_idx.and_then(|i| record.get(i)), "bbox_h")?,
                        confidence: parse_optional_f64(
                            conf_idx.and_then(|i| record.get(i)),
                            "confidence",
                        )?,
                        rope_length_m: parse_optional_f64(
                            rope_idx.and_then(|i| record.get(i)),
                            "rope_length_m",
                        )?,
                    };
                    validate_record(&rec)?;
                    Ok(rec)
                })();
                rows.push((line, parsed));
            }
        }
    }
    Ok(rows)
}

fn load_jsonl_rows(path: &Path) -> Result<Vec<ParsedRow>, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = (i + 1) as u64;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<DetectionRecord>(&line)
            .map_err(|_| "parse:json".to_string())
            .and_then(|rec| validate_record(&rec).map(|()| rec));
        rows.push((line_no, parsed));
    }
    Ok(rows)
}

/// Loads and validates a detection dataset.
///
/// Rows failing validation land in the rejects report with their line number
/// and a `kind:field` reason; a later row reusing an existing frame id is
/// rejected as `duplicate:frame_id`. Accepted records come out sorted by
/// frame id.
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    opts: &LoadOptions,
) -> Result<Dataset, IngestError> {
    let rows = match format {
        DatasetFormat::Csv => load_csv_rows(path)?,
        DatasetFormat::Jsonl => load_jsonl_rows(path)?,
    };

    let total = rows.len();
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    let mut seen = HashSet::new();
    for (line, parsed) in rows {
        match parsed {
            Ok(rec) => {
                if !seen.insert(rec.frame_id) {
                    rejects.push(RejectedRow {
                        line,
                        reason: "duplicate:frame_id".to_string(),
                    });
                } else {
                    records.push(rec);
                }
            }
            Err(reason) => rejects.push(RejectedRow { line, reason }),
        }
    }

    if total > 0 && rejects.len() as f64 > opts.max_reject_fraction * total as f64 {
        return Err(IngestError::LoadFailure {
            rejected: rejects.len(),
            total,
            limit: opts.max_reject_fraction * 100.0,
        });
    }

    records.sort_by_key(|r| r.frame_id);
    let w = f64::from(opts.image_width);
    let h = f64::from(opts.image_height);
    let out_of_bounds = records
        .iter()
        .filter(|r| {
            !(0.0..=w).contains(&r.center_x) || !(0.0..=h).contains(&r.center_y)
        })
        .map(|r| r.frame_id)
        .collect();

    Ok(Dataset {
        records,
        image_width: opts.image_width,
        image_height: opts.image_height,
        source: path.display().to_string(),
        rejects,
        out_of_bounds,
    })
}

/// Writes records as canonical CSV (fixed column order, LF endings).
pub fn write_dataset_csv<W: Write>(records: &[DetectionRecord], writer: W) -> Result<(), IngestError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(CSV_COLUMNS)?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record(&[
            r.frame_id.to_string(),
            r.timestamp.clone().unwrap_or_default(),
            r.center_x.to_string(),
            r.center_y.to_string(),
            fmt(r.bbox_w),
            fmt(r.bbox_h),
            fmt(r.confidence),
            fmt(r.rope_length_m),
        ])?;
    }
    w.flush().map_err(|e| IngestError::Io {
        path: "<writer>".to_string(),
        source: e,
    })?;
    Ok(())
}

pub fn save_dataset_csv(records: &[DetectionRecord], path: &Path) -> Result<(), IngestError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_dataset_csv(records, file)
}

/// SHA-256 over the canonical CSV serialization of the records.
pub fn dataset_fingerprint(records: &[DetectionRecord]) -> String {
    let mut bytes = Vec::new();
    write_dataset_csv(records, &mut bytes).expect("in-memory serialization cannot fail");
    let digest = Sha256::digest(&bytes);
    format!("sha256:{digest:x}")
}

/// Loads a rope sidecar file (`frame_id,rope_length_m`). Exact duplicate
/// entries are tolerated; a frame mapped to two different lengths is a
/// conflict.
pub fn load_rope_file(path: &Path) -> Result<BTreeMap<u64, f64>, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let frame_idx = headers
        .iter()
        .position(|h| h == "frame_id")
        .ok_or(IngestError::MissingColumn("frame_id"))?;
    let rope_idx = headers
        .iter()
        .position(|h| h == "rope_length_m")
        .ok_or(IngestError::MissingColumn("rope_length_m"))?;

    let mut map = BTreeMap::new();
    let mut conflicts = Vec::new();
    for (i, result) in reader.records().enumerate() {
        let line = (i + 2) as u64;
        let record = result?;
        let frame_id: u64 = record
            .get(frame_idx)
            .unwrap_or("")
            .parse()
            .map_err(|_| IngestError::RopeParse {
                line,
                reason: "parse:frame_id".to_string(),
            })?;
        let rope: f64 = record
            .get(rope_idx)
            .unwrap_or("")
            .parse()
            .map_err(|_| IngestError::RopeParse {
                line,
                reason: "parse:rope_length_m".to_string(),
            })?;
        if !rope.is_finite() || rope <= 0.0 {
            return Err(IngestError::RopeParse {
                line,
                reason: "range:rope_length_m".to_string(),
            });
        }
        match map.get(&frame_id) {
            Some(&existing) if existing != rope => conflicts.push(frame_id),
            _ => {
                map.insert(frame_id, rope);
            }
        }
    }
    if !conflicts.is_empty() {
        conflicts.sort_unstable();
        conflicts.dedup();
        return Err(IngestError::JoinConflict(conflicts));
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JoinSummary {
    pub matched: usize,
    /// Frames in the dataset with no rope entry; their rope length stays absent.
    pub missing: Vec<u64>,
    /// Rope entries whose frame id is not in the dataset.
    pub unmatched_rope_entries: usize,
}

/// Fills `rope_length_m` from the sidecar map. Touches nothing else.
pub fn join_rope_lengths(mut ds: Dataset, ropes: &BTreeMap<u64, f64>) -> (Dataset, JoinSummary) {
    let mut matched = 0usize;
    let mut missing = Vec::new();
    let dataset_ids: HashSet<u64> = ds.records.iter().map(|r| r.frame_id).collect();
    for rec in &mut ds.records {
        match ropes.get(&rec.frame_id) {
            Some(&len) => {
                rec.rope_length_m = Some(len);
                matched += 1;
            }
            None => missing.push(rec.frame_id),
        }
    }
    let unmatched_rope_entries = ropes
        .keys()
        .filter(|id| !dataset_ids.contains(id))
        .count();
    (
        ds,
        JoinSummary {
            matched,
            missing,
            unmatched_rope_entries,
        },
    )
}

/// Reduces the dataset to the fields the geometry consumes; RFC 3339
/// timestamps become seconds since the Unix epoch.
pub fn to_pixel_detections(ds: &Dataset) -> Vec<PixelDetection> {
    ds.records
        .iter()
        .map(|r| PixelDetection {
            frame_id: r.frame_id,
            timestamp_s: r.timestamp.as_deref().and_then(|ts| {
                chrono::DateTime::parse_from_rfc3339(ts)
                    .ok()
                    .map(|dt| dt.timestamp_micros() as f64 / 1e6)
            }),
            center_x: r.center_x,
            center_y: r.center_y,
            rope_length_m: r.rope_length_m,
        })
        .collect()
}
