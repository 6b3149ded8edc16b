//! On-disk formats: one CSV of metric rows per run plus a `key = value`
//! summary file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

use super::config::ExperimentConfig;
use super::run::RunRecord;
use super::scaling::ScalingRow;
use super::sweep::SweepResult;

pub const CSV_COLUMNS: [&str; 7] = [
    "iteration",
    "epoch",
    "batch_loss",
    "train_loss",
    "test_loss",
    "test_accuracy",
    "wall_ms",
];

/// Writes `<dir>/<problem>_<optimizer>_<hash>.csv` and returns its path.
pub fn write_run_csv(dir: &Path, cfg: &ExperimentConfig, record: &RunRecord) -> Result<PathBuf> {
    let path = dir.join(format!("{}.csv", cfg.file_stem()));
    let mut writer = csv::Writer::from_path(&path)?;
    writer.write_record(CSV_COLUMNS)?;
    for row in &record.rows {
        writer.write_record([
            row.iteration.to_string(),
            row.epoch.to_string(),
            row.batch_loss.to_string(),
            row.train_loss.to_string(),
            row.test_loss.to_string(),
            row.test_accuracy.map(|a| a.to_string()).unwrap_or_default(),
            format!("{:.3}", row.wall_ms),
        ])?;
    }
    writer.flush()?;
    Ok(path)
}

fn opt_to_string<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "none".into())
}

/// Summary of one run as `key = value` lines.
pub fn run_summary_text(cfg: &ExperimentConfig, record: &RunRecord) -> String {
    let mut out = String::new();
    let s = &record.summary;
    let _ = writeln!(out, "problem = {}", record.problem);
    let _ = writeln!(out, "optimizer = {}", record.optimizer);
    let _ = writeln!(out, "config_hash = {}", record.config_hash);
    let _ = writeln!(out, "eta = {}", cfg.optimizer.eta());
    let _ = writeln!(out, "iterations_completed = {}", s.iterations_completed);
    let _ = writeln!(out, "diverged = {}", s.diverged);
    let _ = writeln!(
        out,
        "best_test_accuracy = {}",
        opt_to_string(s.best_test_accuracy)
    );
    if let Some(last) = record.last() {
        let _ = writeln!(out, "final_train_loss = {}", last.train_loss);
        let _ = writeln!(out, "final_test_loss = {}", last.test_loss);
        let _ = writeln!(
            out,
            "final_test_accuracy = {}",
            opt_to_string(last.test_accuracy)
        );
    }
    for (threshold, hit) in &s.threshold_hits {
        let _ = writeln!(
            out,
            "iterations_to_train_loss[{threshold}] = {}",
            opt_to_string(*hit)
        );
    }
    out
}

pub fn write_run_summary(
    dir: &Path,
    cfg: &ExperimentConfig,
    record: &RunRecord,
) -> Result<PathBuf> {
    let path = dir.join(format!("{}.summary.txt", cfg.file_stem()));
    fs::write(&path, run_summary_text(cfg, record))?;
    Ok(path)
}

/// Summary of a sweep: one `point.<i>.*` block per grid point and the
/// selected best.
pub fn sweep_summary_text(result: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "points = {}", result.points.len());
    for (i, (cfg, record)) in result.points.iter().enumerate() {
        let _ = writeln!(out, "point.{i}.file = {}.csv", cfg.file_stem());
        let _ = writeln!(
            out,
            "point.{i}.optimizer = {}",
            serde_json::to_string(&cfg.optimizer).unwrap_or_default()
        );
        let _ = writeln!(out, "point.{i}.diverged = {}", record.summary.diverged);
        if let Some(last) = record.last() {
            let _ = writeln!(
                out,
                "point.{i}.final_test_accuracy = {}",
                opt_to_string(last.test_accuracy)
            );
            let _ = writeln!(out, "point.{i}.final_test_loss = {}", last.test_loss);
            let _ = writeln!(out, "point.{i}.final_train_loss = {}", last.train_loss);
        }
    }
    match result.best_point() {
        Some((cfg, _)) => {
            let _ = writeln!(out, "best_index = {}", result.best.unwrap_or_default());
            let _ = writeln!(out, "best_file = {}.csv", cfg.file_stem());
            let _ = writeln!(out, "best_eta = {}", cfg.optimizer.eta());
            if let super::config::OptimizerSpec::Sofim { rho, .. } = cfg.optimizer {
                let _ = writeln!(out, "best_rho = {rho}");
            }
        }
        None => {
            let _ = writeln!(out, "best_index = none");
        }
    }
    out
}

pub fn write_scaling_csv(path: &Path, rows: &[ScalingRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["dim", "median_step_ns"])?;
    for row in rows {
        writer.write_record([row.dim.to_string(), format!("{:.1}", row.median_step_ns)])?;
    }
    writer.flush()?;
    Ok(())
}
