use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{SweepConfig, SweepResult, TaskKind};
use crate::error::{Error, Result};

pub const LONG_HEADER: [&str; 21] = [
    "index",
    "carrier_lifetime_s",
    "power_dbm",
    "detuning_ghz",
    "task",
    "metric",
    "mean",
    "std",
    "per_seed",
    "bias",
    "lambda",
    "waveform_accuracy",
    "c1",
    "c2",
    "c3",
    "mc",
    "sigma_delta_nl_hz",
    "self_pulsing",
    "oscillation_depth",
    "region",
    "status",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn joined(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn csv_text(rows: impl IntoIterator<Item = Vec<String>>, header: &[String]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per (grid point, task); failed tasks carry `failed` in the mean
/// column and the error in `status`.
pub fn long_csv(results: &[SweepResult]) -> Result<String> {
    let header: Vec<String> = LONG_HEADER.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for r in results {
        let p = &r.point;
        let cap = r.capacity.as_ref();
        for t in &r.tasks {
            let (mean, status) = match &t.failure {
                Some(f) => ("failed".to_string(), format!("failed: {f}")),
                None => (opt(t.mean), "ok".to_string()),
            };
            rows.push(vec![
                p.index.to_string(),
                p.carrier_lifetime_s.to_string(),
                p.power_dbm.to_string(),
                p.detuning_ghz.to_string(),
                t.task.name().to_string(),
                t.metric.clone(),
                mean,
                opt(t.std),
                joined(&t.per_seed),
                opt(t.bias),
                joined(&t.lambdas),
                opt(t.waveform_accuracy),
                opt(cap.map(|c| c.c1)),
                opt(cap.map(|c| c.c2)),
                opt(cap.map(|c| c.c3)),
                opt(cap.map(|c| c.mc)),
                opt(r.sigma_delta_nl_hz),
                r.self_pulsing.map(|b| b.to_string()).unwrap_or_default(),
                opt(r.oscillation_depth),
                r.region.label().to_string(),
                status,
            ]);
        }
    }
    csv_text(rows, &header)
}

/// Heatmap-ready table for one carrier lifetime: power rows, detuning columns.
/// `cell` renders a grid point; missing points stay empty.
pub fn matrix_csv(
    results: &[SweepResult],
    cfg: &SweepConfig,
    tau_index: usize,
    cell: impl Fn(&SweepResult) -> String,
) -> Result<String> {
    let powers = cfg.grid.power_dbm.values()?;
    let detunings = cfg.grid.detuning_ghz.values()?;
    let per_tau = powers.len() * detunings.len();
    let mut grid = vec![String::new(); per_tau];
    for r in results {
        let i = r.point.index;
        if i / per_tau == tau_index {
            grid[i % per_tau] = cell(r);
        }
    }
    let mut header = vec!["power_dbm\\detuning_ghz".to_string()];
    header.extend(detunings.iter().map(f64::to_string));
    let rows = powers.iter().enumerate().map(|(pi, p)| {
        let mut row = vec![p.to_string()];
        row.extend(
            grid[pi * detunings.len()..(pi + 1) * detunings.len()]
                .iter()
                .cloned(),
        );
        row
    });
    csv_text(rows, &header)
}

/// File names and contents of every matrix table.
pub fn matrix_files(results: &[SweepResult], cfg: &SweepConfig) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (ti, tau) in cfg.grid.carrier_lifetimes_s.iter().enumerate() {
        let suffix = format!("tau_{tau:e}");
        for &kind in &cfg.grid.tasks {
            let metric = results
                .iter()
                .find_map(|r| r.task(kind).map(|t| t.metric.clone()))
                .unwrap_or_else(|| "value".into());
            let text = matrix_csv(results, cfg, ti, |r| match r.task(kind) {
                Some(t) if t.failure.is_some() => "failed".into(),
                Some(t) => opt(t.mean),
                None => String::new(),
            })?;
            out.push((format!("{}_{metric}_{suffix}.csv", kind.name()), text));
            if kind == TaskKind::Classify {
                let text = matrix_csv(results, cfg, ti, |r| {
                    opt(r.task(kind).and_then(|t| t.waveform_accuracy))
                })?;
                out.push((format!("classify_waveform_accuracy_{suffix}.csv"), text));
            }
        }
        let text = matrix_csv(results, cfg, ti, |r| r.region.label().to_string())?;
        out.push((format!("region_{suffix}.csv"), text));
    }
    Ok(out)
}

#[derive(Serialize)]
struct Manifest<'a> {
    software: &'static str,
    version: &'static str,
    config_hash: String,
    seeds: Vec<u64>,
    total_points: usize,
    completed_points: usize,
    points_with_failures: usize,
    files: Vec<String>,
    config: &'a SweepConfig,
}

pub const LONG_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the long table, the per-(task, carrier lifetime) matrices and the
/// manifest. Output depends only on `results` and `cfg`.
pub fn emit_results(
    results: &[SweepResult],
    cfg: &SweepConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = vec![write(out_dir.join(LONG_FILE), &long_csv(results)?)?];
    if !results.is_empty() {
        for (name, text) in matrix_files(results, cfg)? {
            written.push(write(out_dir.join(name), &text)?);
        }
    }
    let files = written
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash()?,
        seeds: cfg.grid.seeds(),
        total_points: cfg.points()?.len(),
        completed_points: results.len(),
        points_with_failures: results.iter().filter(|r| !r.failures.is_empty()).count(),
        files,
        config: cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    written.push(write(out_dir.join(MANIFEST_FILE), &text)?);
    Ok(written)
}
