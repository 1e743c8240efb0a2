//! Plot-ready exports: CSV tables with JSON sidecars.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use last_core::evaluator::{LandscapeGrid, TransferMatrix};
use last_core::grad::Tensor;
use last_core::MetricsRecord;
use serde::Serialize;
use serde_json::json;

pub const METRICS_HEADER: [&str; 7] = ["epoch", "train_loss", "sa", "ra", "robust_loss", "lr", "seconds"];

fn csv_error(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// `metrics.csv` plus the same rows as `metrics.jsonl`.
pub fn write_metrics(dir: &Path, metrics: &[MetricsRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join("metrics.csv")).map_err(csv_error)?;
    w.write_record(METRICS_HEADER).map_err(csv_error)?;
    let mut jsonl = BufWriter::new(File::create(dir.join("metrics.jsonl"))?);
    for m in metrics {
        w.write_record([
            m.epoch.to_string(),
            num(m.train_loss),
            num(m.test_standard_accuracy),
            num(m.test_robust_accuracy),
            num(m.test_robust_loss),
            num(m.lr),
            num(m.wall_time),
        ])
        .map_err(csv_error)?;
        let record = json!({
            "epoch": m.epoch,
            "train_loss": m.train_loss,
            "sa": m.test_standard_accuracy,
            "ra": m.test_robust_accuracy,
            "robust_loss": m.test_robust_loss,
            "lr": m.lr,
            "seconds": m.wall_time,
        });
        writeln!(jsonl, "{record}")?;
    }
    w.flush()?;
    jsonl.flush()
}

/// One row of `eval.csv`.
#[derive(Clone, Debug, Serialize)]
pub struct EvalRow {
    pub attack: String,
    pub epsilon: f64,
    pub steps: usize,
    pub restarts: usize,
    pub sa: f64,
    pub ra: f64,
    pub robust_loss: f64,
}

pub fn write_eval(dir: &Path, rows: &[EvalRow]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join("eval.csv")).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()
}

/// `landscape.csv` (`x,y,loss`) and `landscape.json`.
pub fn write_landscape(dir: &Path, grid: &LandscapeGrid, range: f64, sample: usize) -> io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join("landscape.csv")).map_err(csv_error)?;
    w.write_record(["x", "y", "loss"]).map_err(csv_error)?;
    for (i, &x) in grid.xs.iter().enumerate() {
        for (j, &y) in grid.ys.iter().enumerate() {
            w.write_record([num(x), num(y), num(grid.losses[i][j])]).map_err(csv_error)?;
        }
    }
    w.flush()?;
    let sidecar = json!({
        "gap": grid.gap,
        "seed": grid.seed,
        "range": range,
        "resolution": grid.xs.len(),
        "sample": sample,
        "clean_loss": grid.clean_loss,
        "xs": grid.xs,
        "ys": grid.ys,
    });
    fs::write(dir.join("landscape.json"), serde_json::to_string_pretty(&sidecar)? + "\n")
}

/// `transfer.csv` with sources as rows and targets as columns, plus `transfer.json`.
pub fn write_transfer(dir: &Path, matrix: &TransferMatrix, seed: u64) -> io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join("transfer.csv")).map_err(csv_error)?;
    let header = std::iter::once("source".to_string()).chain(matrix.ids.iter().cloned());
    w.write_record(header).map_err(csv_error)?;
    for (id, row) in matrix.ids.iter().zip(&matrix.ra) {
        w.write_record(std::iter::once(id.clone()).chain(row.iter().map(|&v| num(v))))
            .map_err(csv_error)?;
    }
    w.flush()?;
    let a = &matrix.attack;
    let sidecar = json!({
        "ids": matrix.ids,
        "seed": seed,
        "attack": {
            "epsilon": a.epsilon,
            "alpha": a.alpha,
            "steps": a.steps,
            "restarts": a.restarts,
        },
    });
    fs::write(dir.join("transfer.json"), serde_json::to_string_pretty(&sidecar)? + "\n")
}

/// One `gradmap_c{k}.csv` per channel (rows of the channel image) plus
/// `gradmap.json`.
pub fn write_gradmap(dir: &Path, maps: &[Tensor], sample: usize, label: usize) -> io::Result<()> {
    let mut files = Vec::with_capacity(maps.len());
    for (c, m) in maps.iter().enumerate() {
        let name = format!("gradmap_c{c}.csv");
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(dir.join(&name))
            .map_err(csv_error)?;
        let width = *m.shape().last().unwrap_or(&0);
        for row in m.data().chunks(width.max(1)) {
            w.write_record(row.iter().map(|&v| num(v))).map_err(csv_error)?;
        }
        w.flush()?;
        files.push(name);
    }
    let sidecar = json!({
        "sample": sample,
        "label": label,
        "channels": maps.len(),
        "shape": maps.first().map(|m| m.shape().to_vec()),
        "files": files,
    });
    fs::write(dir.join("gradmap.json"), serde_json::to_string_pretty(&sidecar)? + "\n")
}
