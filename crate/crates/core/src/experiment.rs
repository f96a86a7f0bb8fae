//! Single operating-point evaluation: simulate a task through the reservoir,
//! train the readout and score it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{dbm_to_watts, ghz_to_rad_per_s, CavityConfig, PhysicalParams};
use crate::pipeline::{assemble_states, Mask, Reservoir, ReservoirRun, StateMatrix};
use crate::readout::{accuracy, default_lambdas, group_accuracy, nmse, predict, ser, RidgeCv};
use crate::tasks::{MetricKind, TaskDataset};

/// Everything about the reservoir hardware that stays fixed across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirSetup {
    pub cavity: CavityConfig,
    pub node_count: usize,
    pub symbol_rate_baud: f64,
    /// Fraction of each node's samples averaged by the photodetector.
    pub detector_window: f64,
}

impl Default for ReservoirSetup {
    fn default() -> Self {
        Self {
            cavity: CavityConfig::default(),
            node_count: 50,
            symbol_rate_baud: 1e9,
            detector_window: 0.25,
        }
    }
}

/// Input power and pump detuning of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub power_dbm: f64,
    pub detuning_ghz: f64,
}

impl OperatingPoint {
    pub fn new(power_dbm: f64, detuning_ghz: f64) -> Self {
        Self {
            power_dbm,
            detuning_ghz,
        }
    }

    pub fn power_w(&self) -> f64 {
        dbm_to_watts(self.power_dbm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutOptions {
    pub lambdas: Vec<f64>,
    pub folds: usize,
    /// Candidate input biases.
    pub bias_grid: Vec<f64>,
    /// Tail of the training rows held out when choosing the bias.
    pub validation_fraction: f64,
    pub threshold: f64,
}

impl Default for ReadoutOptions {
    fn default() -> Self {
        Self {
            lambdas: default_lambdas(),
            folds: 5,
            bias_grid: (1..=10).map(|i| i as f64 / 10.0).collect(),
            validation_fraction: 0.2,
            threshold: 0.5,
        }
    }
}

impl ReservoirSetup {
    pub fn params(&self, point: OperatingPoint) -> Result<PhysicalParams> {
        PhysicalParams::from_config(&self.cavity, ghz_to_rad_per_s(point.detuning_ghz))
    }

    pub fn reservoir(&self, point: OperatingPoint, mask: Mask) -> Result<Reservoir> {
        if mask.len() != self.node_count {
            return Err(Error::Shape(format!(
                "mask of {} weights for {} nodes",
                mask.len(),
                self.node_count
            )));
        }
        Ok(Reservoir {
            params: self.params(point)?,
            mask,
            symbol_rate_baud: self.symbol_rate_baud,
            window_fraction: self.detector_window,
        })
    }
}

/// Reservoir response to the first `symbols` samples of a dataset.
#[derive(Debug, Clone)]
pub struct Simulation {
    /// One row per symbol, node columns divided by the mean input power.
    pub states: StateMatrix,
    pub run: ReservoirRun,
}

/// Drives the reservoir with `dataset.input[..symbols]`. The power scale is
/// fitted on the warm-up and training symbols, so a prefix run sees exactly the
/// same waveform as the full run.
pub fn simulate(
    dataset: &TaskDataset,
    reservoir: &Reservoir,
    bias: f64,
    power_w: f64,
    symbols: usize,
) -> Result<Simulation> {
    let symbols = symbols.min(dataset.len());
    let reference = dataset.split.warmup + dataset.split.train;
    // the drive offset must not depend on how much of the stream is simulated
    let offset = Reservoir::drive_offset(&dataset.input, &reservoir.mask)
        - Reservoir::drive_offset(&dataset.input[..symbols], &reservoir.mask);
    let run = reservoir.run(&dataset.input[..symbols], bias + offset, power_w, reference)?;
    let mut states = assemble_states(&run.node_samples, symbols, reservoir.mask.len(), 0)?;
    states.scale_features(1.0 / power_w);
    Ok(Simulation { states, run })
}

/// Score of a trained readout on the test subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    /// NMSE, accuracy or SER depending on the task, averaged over test subsets.
    pub metric: f64,
    /// Per-waveform accuracy for classification tasks.
    pub group_metric: Option<f64>,
    pub lambda: f64,
}

fn metric_on(
    dataset: &TaskDataset,
    pred: &[f64],
    rows: std::ops::Range<usize>,
    threshold: f64,
) -> Result<f64> {
    let target = &dataset.target[rows];
    Ok(match dataset.metric {
        MetricKind::Nmse => nmse(pred, target)?,
        MetricKind::Accuracy => accuracy(pred, target, threshold),
        MetricKind::Ser => ser(pred, target),
    })
}

/// Trains on the training rows of `states` and scores every test subset.
pub fn score(
    dataset: &TaskDataset,
    states: &StateMatrix,
    opts: &ReadoutOptions,
) -> Result<TaskScore> {
    let split = dataset.split;
    let train = split.train_range();
    let cv = RidgeCv::new(&states.slice_rows(train.clone()), &opts.lambdas, opts.folds)?;
    let model = cv.fit(&dataset.target[train])?;
    let tests = split.test_ranges();
    if tests.is_empty() || split.test == 0 {
        return Err(Error::Shape("dataset has no test rows".into()));
    }
    let mut total = 0.0;
    let mut group_total = 0.0;
    for rows in &tests {
        let pred = predict(&model, &states.slice_rows(rows.clone()))?;
        total += metric_on(dataset, &pred, rows.clone(), opts.threshold)?;
        if let Some(groups) = &dataset.groups {
            group_total += group_accuracy(
                &pred,
                &dataset.target[rows.clone()],
                &groups[rows.clone()],
                opts.threshold,
            );
        }
    }
    let n = tests.len() as f64;
    Ok(TaskScore {
        metric: total / n,
        group_metric: dataset.groups.as_ref().map(|_| group_total / n),
        lambda: model.ridge_lambda,
    })
}

/// Lower is better; accuracy is negated. Ties fall back to the validation MSE.
fn validation_key(
    dataset: &TaskDataset,
    pred: &[f64],
    rows: std::ops::Range<usize>,
    threshold: f64,
) -> Result<(f64, f64)> {
    let primary = metric_on(dataset, pred, rows.clone(), threshold)?;
    let mse = pred
        .iter()
        .zip(&dataset.target[rows])
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / pred.len() as f64;
    let primary = match dataset.metric {
        MetricKind::Accuracy => -primary,
        _ => primary,
    };
    Ok((primary, mse))
}

/// Validation score of one bias: simulate warm-up and training symbols only,
/// fit on the head of the training rows and score the tail.
pub fn validate_bias(
    dataset: &TaskDataset,
    reservoir: &Reservoir,
    bias: f64,
    power_w: f64,
    opts: &ReadoutOptions,
) -> Result<(f64, f64)> {
    let train = dataset.split.train_range();
    let sim = simulate(dataset, reservoir, bias, power_w, train.end)?;
    let held_out = ((train.len() as f64) * opts.validation_fraction).round() as usize;
    let cut = train.end - held_out;
    if held_out == 0 || cut <= train.start {
        return Err(Error::param(
            "validation_fraction",
            "leaves no validation or fitting rows",
        ));
    }
    let fit_rows = train.start..cut;
    let cv = RidgeCv::new(
        &sim.states.slice_rows(fit_rows.clone()),
        &opts.lambdas,
        opts.folds,
    )?;
    let model = cv.fit(&dataset.target[fit_rows])?;
    let pred = predict(&model, &sim.states.slice_rows(cut..train.end))?;
    validation_key(dataset, &pred, cut..train.end, opts.threshold)
}

/// Bias with the best validation score; earlier candidates win ties. Candidates
/// whose simulation fails are skipped.
pub fn select_bias(
    dataset: &TaskDataset,
    reservoir: &Reservoir,
    power_w: f64,
    opts: &ReadoutOptions,
) -> Result<f64> {
    let mut best: Option<((f64, f64), f64)> = None;
    let mut last_err = None;
    for &b in &opts.bias_grid {
        match validate_bias(dataset, reservoir, b, power_w, opts) {
            Ok(key) if key.0.is_finite() && key.1.is_finite() => {
                if best.is_none_or(|(k, _)| key < k) {
                    best = Some((key, b));
                }
            }
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some((_, b)), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::param(
            "bias_grid",
            "no candidate produced a finite score",
        )),
    }
}

/// Full run of a dataset at a fixed bias.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub score: TaskScore,
    pub simulation: Simulation,
}

pub fn evaluate(
    dataset: &TaskDataset,
    reservoir: &Reservoir,
    bias: f64,
    power_w: f64,
    opts: &ReadoutOptions,
) -> Result<Evaluation> {
    let simulation = simulate(dataset, reservoir, bias, power_w, dataset.len())?;
    let score = score(dataset, &simulation.states, opts)?;
    Ok(Evaluation { score, simulation })
}
