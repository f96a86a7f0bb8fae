use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{emit_results, evaluate_point, SweepConfig, SweepResult};
use crate::error::{Error, Result};

pub const CHECKPOINT_FILE: &str = "checkpoint.jsonl";

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
    /// Continue from an existing checkpoint in the output directory.
    pub resume: bool,
    /// Stop after evaluating this many new points.
    pub max_points: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Every finished point, ordered by grid index.
    pub results: Vec<SweepResult>,
    pub total_points: usize,
}

impl SweepOutcome {
    pub fn is_complete(&self) -> bool {
        self.results.len() == self.total_points
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    config_hash: String,
}

/// Reads the points already stored in a checkpoint. A torn final line (from an
/// interrupted write) is dropped.
fn read_checkpoint(path: &Path, hash: &str) -> Result<BTreeMap<usize, SweepResult>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let mut done = BTreeMap::new();
    let Some(first) = lines.first() else {
        return Ok(done);
    };
    let header: Header = serde_json::from_str(first)
        .map_err(|e| Error::Checkpoint(format!("unreadable header: {e}")))?;
    if header.config_hash != hash {
        return Err(Error::Checkpoint(format!(
            "checkpoint belongs to config {} but the current config is {hash}",
            header.config_hash
        )));
    }
    let last = lines.len() - 1;
    for (i, line) in lines.iter().enumerate().skip(1) {
        match serde_json::from_str::<SweepResult>(line) {
            Ok(r) => {
                done.insert(r.point.index, r);
            }
            Err(_) if i == last => {}
            Err(e) => return Err(Error::Checkpoint(format!("line {}: {e}", i + 1))),
        }
    }
    Ok(done)
}

fn write_line(w: &mut impl Write, value: &impl Serialize, path: &Path) -> Result<()> {
    let text = serde_json::to_string(value).map_err(|e| Error::Checkpoint(e.to_string()))?;
    writeln!(w, "{text}")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Runs every pending grid point, appending each result to the checkpoint as it
/// finishes, then writes the result tables.
pub fn run_sweep(cfg: &SweepConfig, out_dir: &Path, opts: &SweepOptions) -> Result<SweepOutcome> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let hash = cfg.hash()?;
    let path = out_dir.join(CHECKPOINT_FILE);
    let mut done = if opts.resume && path.exists() {
        read_checkpoint(&path, &hash)?
    } else {
        BTreeMap::new()
    };

    // rewrite so a torn line from an interrupted run never stays in the middle
    {
        let mut w = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        write_line(
            &mut w,
            &Header {
                config_hash: hash.clone(),
            },
            &path,
        )?;
        for r in done.values() {
            write_line(&mut w, r, &path)?;
        }
    }

    let points = cfg.points()?;
    let total_points = points.len();
    let mut pending: Vec<_> = points
        .into_iter()
        .filter(|p| !done.contains_key(&p.index))
        .collect();
    if let Some(n) = opts.max_points {
        pending.truncate(n);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let (tx, rx) = mpsc::channel::<SweepResult>();
    let fresh = std::thread::scope(|scope| -> Result<Vec<SweepResult>> {
        let writer = scope.spawn(|| -> Result<Vec<SweepResult>> {
            let file = OpenOptions::new()
                .append(true)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(file);
            let mut got = Vec::new();
            for r in rx {
                write_line(&mut w, &r, &path)?;
                got.push(r);
            }
            Ok(got)
        });
        pool.install(|| {
            pending.par_iter().for_each_with(tx, |tx, p| {
                // the writer only hangs up after an I/O error, reported below
                let _ = tx.send(evaluate_point(cfg, *p));
            })
        });
        writer.join().expect("checkpoint writer panicked")
    })?;

    for r in fresh {
        done.insert(r.point.index, r);
    }
    let results: Vec<SweepResult> = done.into_values().collect();
    emit_results(&results, cfg, out_dir)?;
    Ok(SweepOutcome {
        results,
        total_points,
    })
}
