//! `simulate`: seeded replication study plus optional synthetic dataset
//! emission.
//!
//! Primary outputs (byte-stable for a fixed seed):
//! - `errors_beta.csv`, `errors_sigma.csv` — per-replication estimation
//!   errors, one column per sample size
//! - `iterations.csv` — iteration counts in the same layout
//! - `convergence_beta_n<N>.csv`, `convergence_sigma_n<N>.csv` — per-iteration
//!   distance from the final estimate, one column per iteration
//! - the emitted dataset, when requested
//!
//! `study.json` additionally records per-replication wall times, which vary
//! across runs by nature.

use crate::config::{load_json, save_json, SimulateFile};
use crate::errors::{write_failed, CliError};
use clap::Args;
use grabwatch::ingestion::{save_dataset_csv, DetectionRecord};
use grabwatch::simulator::{
    draw_sample, emission_stream, replication_rng, run_study, StudyCell, StudyReport,
};
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct SimulateArgs {
    /// Study config (JSON)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for study reports
    #[arg(long, default_value = "simulation_out")]
    pub out_dir: PathBuf,
    /// Also write a synthetic detection CSV usable by `calibrate`
    #[arg(long)]
    pub emit_dataset: Option<PathBuf>,
    /// Image width for the emitted dataset
    #[arg(long, default_value_t = 1920)]
    pub image_width: u32,
    /// Image height for the emitted dataset
    #[arg(long, default_value_t = 1080)]
    pub image_height: u32,
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let file: SimulateFile = load_json(&args.config)?;
    let cfg = file.to_config();
    let report = run_study(&cfg)?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| write_failed(&args.out_dir, e))?;
    save_json(&report, &args.out_dir.join("study.json"))?;
    write_error_matrix(&report, &args.out_dir.join("errors_beta.csv"), |o| {
        o.abs_beta_error_rad
    })?;
    write_error_matrix(&report, &args.out_dir.join("errors_sigma.csv"), |o| {
        o.rel_sigma_sq_error
    })?;
    write_iterations_matrix(&report, &args.out_dir.join("iterations.csv"))?;
    for cell in &report.cells {
        write_convergence_matrix(
            cell,
            &args.out_dir.join(format!("convergence_beta_n{}.csv", cell.n)),
            |o| &o.beta_convergence,
        )?;
        write_convergence_matrix(
            cell,
            &args.out_dir.join(format!("convergence_sigma_n{}.csv", cell.n)),
            |o| &o.sigma_convergence,
        )?;
    }

    if let Some(path) = &args.emit_dataset {
        emit_dataset(&cfg, args, path)?;
        println!("emitted {} synthetic detections to {}", cfg.n, path.display());
    }

    for cell in &report.cells {
        let beta_med = cell.beta_error_summary.map(|s| s.median).unwrap_or(f64::NAN);
        let sigma_med = cell.sigma_error_summary.map(|s| s.median).unwrap_or(f64::NAN);
        let mean_time: f64 = cell
            .outcomes
            .iter()
            .map(|o| o.wall_time_s)
            .sum::<f64>()
            / cell.outcomes.len().max(1) as f64;
        println!(
            "n = {:>7}: median |beta error| = {:.3e} rad, median |sigma2 rel error| = {:.3e}, \
             max iterations = {}, failed = {}, mean time = {:.4} s",
            cell.n, beta_med, sigma_med, cell.max_iterations, cell.failed, mean_time
        );
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path)
        .map_err(|e| CliError::input(format!("failed to write {}: {e}", path.display())))
}

/// One column per sample size, one row per replication. Failed replications
/// leave an empty cell.
fn write_error_matrix(
    report: &StudyReport,
    path: &Path,
    metric: impl Fn(&grabwatch::simulator::ReplicationOutcome) -> f64,
) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let header: Vec<String> = report.cells.iter().map(|c| format!("n_{}", c.n)).collect();
    w.write_record(&header).map_err(|e| CliError::input(e.to_string()))?;
    let rows = report.config.replications;
    for rep in 0..rows {
        let record: Vec<String> = report
            .cells
            .iter()
            .map(|c| {
                let o = &c.outcomes[rep];
                if o.error.is_some() {
                    String::new()
                } else {
                    metric(o).to_string()
                }
            })
            .collect();
        w.write_record(&record).map_err(|e| CliError::input(e.to_string()))?;
    }
    w.flush().map_err(|e| write_failed(path, e))
}

fn write_iterations_matrix(report: &StudyReport, path: &Path) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let header: Vec<String> = report.cells.iter().map(|c| format!("n_{}", c.n)).collect();
    w.write_record(&header).map_err(|e| CliError::input(e.to_string()))?;
    for rep in 0..report.config.replications {
        let record: Vec<String> = report
            .cells
            .iter()
            .map(|c| {
                let o = &c.outcomes[rep];
                if o.error.is_some() {
                    String::new()
                } else {
                    o.iterations.to_string()
                }
            })
            .collect();
        w.write_record(&record).map_err(|e| CliError::input(e.to_string()))?;
    }
    w.flush().map_err(|e| write_failed(path, e))
}

/// One column per iteration index; replications that converged earlier pad
/// with zero, which is their exact distance from the final estimate.
fn write_convergence_matrix<'a>(
    cell: &'a StudyCell,
    path: &Path,
    trace: impl Fn(&'a grabwatch::simulator::ReplicationOutcome) -> &'a Vec<f64>,
) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let width = cell
        .outcomes
        .iter()
        .filter(|o| o.error.is_none())
        .map(|o| trace(o).len())
        .max()
        .unwrap_or(0);
    let header: Vec<String> = (0..width).map(|t| format!("t_{t}")).collect();
    w.write_record(&header).map_err(|e| CliError::input(e.to_string()))?;
    for o in &cell.outcomes {
        if o.error.is_some() {
            continue;
        }
        let values = trace(o);
        let record: Vec<String> = (0..width)
            .map(|t| values.get(t).copied().unwrap_or(0.0).to_string())
            .collect();
        w.write_record(&record).map_err(|e| CliError::input(e.to_string()))?;
    }
    w.flush().map_err(|e| write_failed(path, e))
}

/// Synthesizes a detection CSV from the study's model parameters on a fresh
/// RNG stream placed after all replication streams.
fn emit_dataset(
    cfg: &grabwatch::simulator::SimulationConfig,
    args: &SimulateArgs,
    path: &Path,
) -> Result<(), CliError> {
    let mut rng = replication_rng(cfg.seed, emission_stream(cfg));
    let draws = draw_sample(cfg.beta_true, cfg.sigma_true, cfg.h, cfg.n, &mut rng);
    let (px, py) = (
        f64::from(args.image_width) / 2.0,
        f64::from(args.image_height) / 2.0,
    );
    // The reference line of the synthetic camera points along +x (phi = 0).
    let records: Vec<DetectionRecord> = draws
        .iter()
        .enumerate()
        .map(|(i, d)| DetectionRecord {
            frame_id: i as u64,
            timestamp: None,
            center_x: px + d.point.m * d.point.theta.cos(),
            center_y: py + d.point.m * d.point.theta.sin(),
            bbox_w: None,
            bbox_h: None,
            confidence: None,
            rope_length_m: None,
        })
        .collect();
    save_dataset_csv(&records, path)?;
    Ok(())
}
