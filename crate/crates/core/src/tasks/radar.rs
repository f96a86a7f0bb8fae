use std::path::Path;

use rand_distr::{Distribution, StandardNormal};

use super::{task_rng, MetricKind, Split, TaskDataset, RADAR_STREAM};
use crate::error::{Error, Result};
use crate::pipeline::MaskRange;

/// In-phase and quadrature samples of a complex radar return.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarIq {
    pub i: Vec<f64>,
    pub q: Vec<f64>,
}

impl RadarIq {
    /// Interleaves the components: `[i0, q0, i1, q1, ...]`.
    pub fn flatten(&self) -> Vec<f64> {
        self.i
            .iter()
            .zip(&self.q)
            .flat_map(|(&a, &b)| [a, b])
            .collect()
    }
}

/// Reads a CSV with header `i,q` and one complex sample per row.
pub fn read_radar_csv(path: &Path) -> Result<RadarIq> {
    let bad = |reason: String| Error::Dataset {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    if header != ["i", "q"] {
        return Err(bad(format!(
            "expected header `i,q`, found `{}`",
            header.join(",")
        )));
    }
    let mut iq = RadarIq {
        i: Vec::new(),
        q: Vec::new(),
    };
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let line = row + 2;
        let parse = |col: usize| -> Result<f64> {
            let field = record.get(col).unwrap_or("");
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("line {line}: `{field}` is not a finite number")))
        };
        iq.i.push(parse(0)?);
        iq.q.push(parse(1)?);
    }
    Ok(iq)
}

/// k-step-ahead prediction of the interleaved radar stream, scaled so the
/// largest magnitude is 1.
pub fn radar_dataset(iq: &RadarIq, k: usize, split: Split) -> Result<TaskDataset> {
    if !(1..=2).contains(&k) {
        return Err(Error::param(
            "k",
            format!("prediction horizon must be 1 or 2, got {k}"),
        ));
    }
    let flat = iq.flatten();
    let len = split.total();
    if flat.len() < len + k {
        return Err(Error::Dataset {
            path: Default::default(),
            reason: format!(
                "radar record too short: {} flattened samples, need {}",
                flat.len(),
                len + k
            ),
        });
    }
    let peak = flat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let x: Vec<f64> = flat.iter().map(|v| v / peak).collect();
    Ok(TaskDataset {
        name: format!("radar_k{k}"),
        input: x[..len].to_vec(),
        target: x[k..len + k].to_vec(),
        split,
        mask_range: MaskRange::Unit,
        input_bias_preshift: 0.0,
        metric: MetricKind::Nmse,
        groups: None,
        seed_used: 0,
        notes: Vec::new(),
    })
}

/// Loads a radar CSV and builds the prediction task.
pub fn load_radar(path: &Path, k: usize, split: Split) -> Result<TaskDataset> {
    let iq = read_radar_csv(path)?;
    radar_dataset(&iq, k, split).map_err(|e| match e {
        Error::Dataset { reason, .. } => Error::Dataset {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

/// Synthetic sea-clutter stand-in, `len` complex samples.
///
/// Compound-Gaussian model: complex AR(1) speckle (pole 0.95 rotated by a
/// Doppler of 0.03 cycles/sample) modulated by a log-normal texture whose log
/// follows a slow AR(1) (pole 0.998). The texture gives the heavy-tailed,
/// spiky amplitude of high sea states.
pub fn gen_surrogate_radar(len: usize, seed: u64) -> RadarIq {
    let mut rng = task_rng(seed, RADAR_STREAM);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let pole = 0.95f64;
    let doppler = std::f64::consts::TAU * 0.03;
    let (c, s) = (pole * doppler.cos(), pole * doppler.sin());
    let drive = (1.0 - pole * pole).sqrt();
    let texture_pole = 0.998f64;
    let texture_drive = 0.6 * (1.0 - texture_pole * texture_pole).sqrt();
    let (mut re, mut im, mut log_tex) = (normal(), normal(), 0.0);
    let mut iq = RadarIq {
        i: Vec::with_capacity(len),
        q: Vec::with_capacity(len),
    };
    for _ in 0..len {
        let (nr, ni) = (normal(), normal());
        (re, im) = (c * re - s * im + drive * nr, s * re + c * im + drive * ni);
        log_tex = texture_pole * log_tex + texture_drive * normal();
        let amp = log_tex.exp();
        iq.i.push(amp * re);
        iq.q.push(amp * im);
    }
    iq
}
