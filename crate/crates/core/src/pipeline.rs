//! Input masking, optical modulation, photodetection and state-matrix assembly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cavity::DetuningTrace;
use crate::error::{Error, Result};
use crate::feedback::FeedbackLoop;
use crate::params::{steps_in, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskRange {
    /// Weights drawn from `[0, 1]`.
    Unit,
    /// Weights drawn from `[-1, 1]`.
    Symmetric,
}

impl MaskRange {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            MaskRange::Unit => (0.0, 1.0),
            MaskRange::Symmetric => (-1.0, 1.0),
        }
    }
}

/// Fixed random per-node input weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub values: Vec<f64>,
}

impl Mask {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Uniform mask of `nodes` weights over `range`, reproducible from `seed`.
    pub fn random(nodes: usize, range: MaskRange, seed: u64) -> Self {
        let (lo, hi) = range.bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            values: (0..nodes).map(|_| rng.random_range(lo..=hi)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationConfig {
    pub symbol_rate_baud: f64,
    pub node_count: usize,
    pub input_bias: f64,
    pub average_power_w: f64,
    pub pump_detuning: f64,
}

impl ModulationConfig {
    /// `theta = 1 / (symbol_rate * N)`.
    pub fn node_duration(&self) -> f64 {
        1.0 / (self.symbol_rate_baud * self.node_count as f64)
    }

    pub fn steps_per_node(&self, dt: f64) -> Result<usize> {
        let n = steps_in(self.node_duration(), dt, "node_duration")?;
        if n == 0 {
            return Err(Error::param(
                "node_duration",
                "shorter than one integration step",
            ));
        }
        Ok(n)
    }
}

/// Node-rate drive `u(n) * mask[j] + bias`, all nodes of symbol `n` before symbol `n + 1`.
pub fn build_masked_input(u: &[f64], mask: &Mask, bias: f64) -> Vec<f64> {
    u.iter()
        .flat_map(|&x| mask.values.iter().map(move |&m| x * m + bias))
        .collect()
}

/// Linear drive-to-power map, fixed once from a reference stretch of the drive so
/// that its mean optical power is `average_power_w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerScale {
    pub watts_per_unit: f64,
}

impl PowerScale {
    pub fn fit(drive: &[f64], average_power_w: f64) -> Result<Self> {
        if !(average_power_w > 0.0) {
            return Err(Error::param("average_power_w", "must be positive"));
        }
        check_non_negative(drive)?;
        let mean = drive.iter().sum::<f64>() / drive.len().max(1) as f64;
        if !(mean > 0.0) {
            return Err(Error::param(
                "drive",
                "mean drive must be positive to set the power scale",
            ));
        }
        Ok(Self {
            watts_per_unit: average_power_w / mean,
        })
    }

    /// Optical power for each drive sample.
    pub fn powers(&self, drive: &[f64]) -> Result<Vec<f64>> {
        check_non_negative(drive)?;
        Ok(drive.iter().map(|&x| x * self.watts_per_unit).collect())
    }
}

fn check_non_negative(drive: &[f64]) -> Result<()> {
    match drive.iter().position(|&x| !(x >= 0.0)) {
        Some(index) => Err(Error::NegativePower {
            index,
            value: drive[index],
        }),
        None => Ok(()),
    }
}

/// Square-root field envelope on the `dt` grid, power held constant over each node
/// and normalized so that the mean power of `drive` equals `cfg.average_power_w`.
pub fn modulate(drive: &[f64], cfg: &ModulationConfig, dt: f64) -> Result<Vec<Complex64>> {
    let spn = cfg.steps_per_node(dt)?;
    let scale = PowerScale::fit(drive, cfg.average_power_w)?;
    Ok(scale
        .powers(drive)?
        .into_iter()
        .flat_map(|p| std::iter::repeat_n(Complex64::new(p.sqrt(), 0.0), spn))
        .collect())
}

/// Number of trailing samples averaged per node.
pub fn detector_window(steps_per_node: usize, fraction: f64) -> usize {
    ((steps_per_node as f64 * fraction).round() as usize).clamp(1, steps_per_node)
}

/// One sample per node: the mean drop power over the final quarter of the node.
pub fn photodetect(drop_power: &[f64], steps_per_node: usize) -> Result<Vec<f64>> {
    photodetect_with(drop_power, steps_per_node, 0.25)
}

pub fn photodetect_with(
    drop_power: &[f64],
    steps_per_node: usize,
    fraction: f64,
) -> Result<Vec<f64>> {
    if steps_per_node == 0 || !drop_power.len().is_multiple_of(steps_per_node) {
        return Err(Error::Shape(format!(
            "waveform of {} samples is not aligned to nodes of {} samples",
            drop_power.len(),
            steps_per_node
        )));
    }
    let w = detector_window(steps_per_node, fraction);
    Ok(drop_power
        .chunks_exact(steps_per_node)
        .map(|node| node[steps_per_node - w..].iter().sum::<f64>() / w as f64)
        .collect())
}

/// `L x (N + 1)` matrix of node samples with a trailing column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    pub data: DMatrix<f64>,
}

impl StateMatrix {
    /// Builds a state matrix from row-major features (bias column appended).
    pub fn from_features(rows: usize, nodes: usize, features: &[f64]) -> Result<Self> {
        if features.len() != rows * nodes {
            return Err(Error::Shape(format!(
                "{} features for a {rows} x {nodes} matrix",
                features.len()
            )));
        }
        let data = DMatrix::from_fn(rows, nodes + 1, |r, c| {
            if c == nodes {
                1.0
            } else {
                features[r * nodes + c]
            }
        });
        Ok(Self { data })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn nodes(&self) -> usize {
        self.cols() - 1
    }

    /// Rows `range` as a new state matrix.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            data: self.data.rows(range.start, range.len()).into_owned(),
        }
    }

    /// Multiplies the node columns (not the bias column) by `factor`.
    pub fn scale_features(&mut self, factor: f64) {
        let n = self.nodes();
        self.data.columns_mut(0, n).scale_mut(factor);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows() {
            let row: Vec<String> = (0..self.cols())
                .map(|c| self.data[(r, c)].to_string())
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Drops `warmup` symbols, reshapes the rest into `l x n` and appends the bias column.
pub fn assemble_states(samples: &[f64], l: usize, n: usize, warmup: usize) -> Result<StateMatrix> {
    if samples.len() != (warmup + l) * n {
        return Err(Error::Shape(format!(
            "expected {} node samples for warm-up {warmup} + {l} symbols of {n} nodes, got {}",
            (warmup + l) * n,
            samples.len()
        )));
    }
    StateMatrix::from_features(l, n, &samples[warmup * n..])
}

/// Node samples and detuning trace of one reservoir run.
#[derive(Debug, Clone, Default)]
pub struct ReservoirRun {
    /// Photodetected drop power, one value per node, row-major by symbol.
    pub node_samples: Vec<f64>,
    /// Nonlinear detuning at the last integration step of every node, Hz.
    pub trace: DetuningTrace,
}

/// Streams node-level powers through the closed loop and photodetects the drop port
/// without materializing the `dt`-grid waveform.
pub fn drive_reservoir(
    node_powers: &[f64],
    params: &PhysicalParams,
    steps_per_node: usize,
    window_fraction: f64,
) -> Result<ReservoirRun> {
    let mut lp = FeedbackLoop::new(params)?;
    let w = detector_window(steps_per_node, window_fraction);
    let mut node_samples = Vec::with_capacity(node_powers.len());
    let mut trace = Vec::with_capacity(node_powers.len());
    for &p in node_powers {
        if !(p >= 0.0) {
            return Err(Error::NegativePower {
                index: node_samples.len(),
                value: p,
            });
        }
        let field = Complex64::new(p.sqrt(), 0.0);
        let mut acc = 0.0;
        let mut last = 0.0;
        for k in 0..steps_per_node {
            let s = lp.advance(field)?;
            if k >= steps_per_node - w {
                acc += s.fields.drop_power();
            }
            last = s.detuning_hz;
        }
        node_samples.push(acc / w as f64);
        trace.push(last);
    }
    Ok(ReservoirRun {
        node_samples,
        trace: DetuningTrace::new(trace),
    })
}

/// Masks, biases and modulates `u`, then runs it through the closed-loop ring.
///
/// The bias actually applied is `bias` plus the smallest offset that keeps the
/// drive non-negative for this mask and input. The power scale is fitted on the
/// first `reference_symbols` symbols and applied to the whole sequence.
#[derive(Debug, Clone)]
pub struct Reservoir {
    pub params: PhysicalParams,
    pub mask: Mask,
    pub symbol_rate_baud: f64,
    pub window_fraction: f64,
}

impl Reservoir {
    pub fn steps_per_node(&self) -> Result<usize> {
        let theta = 1.0 / (self.symbol_rate_baud * self.mask.len() as f64);
        let n = steps_in(theta, self.params.dt, "node_duration")?;
        if n == 0 {
            return Err(Error::param(
                "node_duration",
                "shorter than one integration step",
            ));
        }
        Ok(n)
    }

    pub fn drive_offset(u: &[f64], mask: &Mask) -> f64 {
        let lo = u
            .iter()
            .flat_map(|&x| mask.values.iter().map(move |&m| x * m))
            .fold(0.0f64, f64::min);
        -lo
    }

    pub fn run(
        &self,
        u: &[f64],
        bias: f64,
        average_power_w: f64,
        reference_symbols: usize,
    ) -> Result<ReservoirRun> {
        if self.mask.is_empty() {
            return Err(Error::param("mask", "needs at least one node"));
        }
        let spn = self.steps_per_node()?;
        let offset = Self::drive_offset(u, &self.mask);
        let drive = build_masked_input(u, &self.mask, bias + offset);
        let reference = &drive[..(reference_symbols * self.mask.len()).min(drive.len())];
        let scale = PowerScale::fit(reference, average_power_w)?;
        let powers = scale.powers(&drive)?;
        drive_reservoir(&powers, &self.params, spn, self.window_fraction)
    }
}
