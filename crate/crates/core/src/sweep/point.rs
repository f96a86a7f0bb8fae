use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{GridPoint, SweepConfig, SweepResult, TaskKind};
use crate::capacity::total_memory_capacity;
use crate::error::{Error, Result};
use crate::experiment::{evaluate, select_bias, OperatingPoint, ReservoirSetup, Simulation};
use crate::feedback::detect_self_pulsing;
use crate::params::ghz_to_rad_per_s;
use crate::pipeline::Mask;
use crate::tasks::{
    gen_channel_equalization, gen_narma10, gen_surrogate_radar, gen_waveform_classification,
    load_radar, radar_dataset, MetricKind, TaskDataset,
};

/// Seed-resolved result of one task (or of the capacity / detuning summaries)
/// at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: TaskKind,
    pub metric: String,
    pub per_seed: Vec<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Per-waveform accuracy (classification only), averaged over seeds.
    pub waveform_accuracy: Option<f64>,
    pub bias: Option<f64>,
    /// Ridge parameter chosen for each seed.
    pub lambdas: Vec<f64>,
    pub failure: Option<String>,
}

impl TaskResult {
    fn new(task: TaskKind, metric: &str) -> Self {
        Self {
            task,
            metric: metric.into(),
            per_seed: Vec::new(),
            mean: None,
            std: None,
            waveform_accuracy: None,
            bias: None,
            lambdas: Vec::new(),
            failure: None,
        }
    }

    fn failed(task: TaskKind, metric: &str, e: &Error) -> Self {
        Self {
            failure: Some(e.to_string()),
            ..Self::new(task, metric)
        }
    }

    fn finish(mut self) -> Self {
        let (mean, std) = mean_std(&self.per_seed);
        self.mean = Some(mean);
        self.std = Some(std);
        self
    }
}

/// Seed-averaged capacities by order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySummary {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub mc: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn metric_name(kind: MetricKind) -> &'static str {
    match kind {
        MetricKind::Nmse => "nmse",
        MetricKind::Accuracy => "accuracy",
        MetricKind::Ser => "ser",
    }
}

fn task_metric_name(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::Classify => "accuracy",
        TaskKind::Equalize => "ser",
        TaskKind::Capacity => "mc",
        TaskKind::Detuning => "sigma_hz",
        TaskKind::Narma10 | TaskKind::Radar => "nmse",
    }
}

/// Dataset of a benchmark task for one seed.
pub(crate) fn dataset(kind: TaskKind, seed: u64, cfg: &SweepConfig) -> Result<TaskDataset> {
    let t = &cfg.tasks;
    match kind {
        TaskKind::Narma10 | TaskKind::Capacity | TaskKind::Detuning => {
            Ok(gen_narma10(t.narma10, seed))
        }
        TaskKind::Classify => Ok(gen_waveform_classification(t.classify, seed)),
        TaskKind::Equalize => Ok(gen_channel_equalization(t.equalize, seed, t.snr_db)),
        TaskKind::Radar => {
            let r = &t.radar;
            match &r.path {
                Some(path) => load_radar(path, r.k, r.split),
                None => {
                    let samples = (r.split.total() + r.k).div_ceil(2);
                    let mut d = radar_dataset(&gen_surrogate_radar(samples, seed), r.k, r.split)?;
                    d.seed_used = seed;
                    Ok(d)
                }
            }
        }
    }
}

struct TaskRuns {
    result: TaskResult,
    datasets: Vec<TaskDataset>,
    sims: Vec<Simulation>,
}

/// Picks the bias on the first seed, then evaluates every seed with it.
fn run_task(
    kind: TaskKind,
    setup: &ReservoirSetup,
    op: OperatingPoint,
    seeds: &[u64],
    fixed_bias: Option<f64>,
    cfg: &SweepConfig,
) -> Result<TaskRuns> {
    let power = op.power_w();
    let mut datasets = Vec::with_capacity(seeds.len());
    for &s in seeds {
        datasets.push(dataset(kind, s, cfg)?);
    }
    let mask_for = |i: usize| Mask::random(setup.node_count, datasets[i].mask_range, seeds[i]);
    let bias = match fixed_bias {
        Some(b) => b,
        None => select_bias(
            &datasets[0],
            &setup.reservoir(op, mask_for(0))?,
            power,
            &cfg.readout,
        )?,
    };
    let mut result = TaskResult::new(kind, metric_name(datasets[0].metric));
    result.bias = Some(bias);
    let mut sims = Vec::with_capacity(seeds.len());
    let mut groups = Vec::new();
    for (i, data) in datasets.iter().enumerate() {
        let e = evaluate(
            data,
            &setup.reservoir(op, mask_for(i))?,
            bias,
            power,
            &cfg.readout,
        )?;
        result.per_seed.push(e.score.metric);
        result.lambdas.push(e.score.lambda);
        if let Some(g) = e.score.group_metric {
            groups.push(g);
        }
        sims.push(e.simulation);
    }
    if !groups.is_empty() {
        result.waveform_accuracy = Some(mean_std(&groups).0);
    }
    Ok(TaskRuns {
        result: result.finish(),
        datasets,
        sims,
    })
}

/// Evaluates every requested task at one grid point. Failures are recorded in
/// the result instead of being returned.
pub fn evaluate_point(cfg: &SweepConfig, point: GridPoint) -> SweepResult {
    let start = Instant::now();
    let seeds = cfg.grid.seeds();
    let op = OperatingPoint::new(point.power_dbm, point.detuning_ghz);
    let mut failures = Vec::new();
    let mut tasks = Vec::new();
    let mut capacity = None;
    let mut sigma = None;
    let mut self_pulsing = None;
    let mut depth = None;

    let setup = match cfg.setup_for(point.carrier_lifetime_s) {
        Ok(s) => Some(s),
        Err(e) => {
            failures.push(e.to_string());
            None
        }
    };
    if let Some(setup) = &setup {
        match setup.params(op).and_then(|p| {
            detect_self_pulsing(
                &p,
                op.power_w(),
                ghz_to_rad_per_s(op.detuning_ghz),
                &cfg.self_pulsing,
            )
        }) {
            Ok(sp) => {
                self_pulsing = Some(sp.is_pulsing);
                depth = Some(sp.oscillation_depth);
            }
            Err(e) => failures.push(format!("self-pulsing: {e}")),
        }

        let mut reference: Option<TaskRuns> = None;
        let mut first_runs: Option<TaskRuns> = None;
        for &kind in cfg.grid.tasks.iter().filter(|k| k.is_benchmark()) {
            match run_task(kind, setup, op, &seeds, None, cfg) {
                Ok(runs) => {
                    tasks.push(runs.result.clone());
                    if kind == TaskKind::Narma10 {
                        reference = Some(runs);
                    } else if first_runs.is_none() {
                        first_runs = Some(runs);
                    }
                }
                Err(e) => {
                    failures.push(format!("{}: {e}", kind.name()));
                    tasks.push(TaskResult::failed(kind, task_metric_name(kind), &e));
                }
            }
        }
        let wants_reference = cfg
            .grid
            .tasks
            .iter()
            .any(|k| matches!(k, TaskKind::Capacity | TaskKind::Detuning));
        let narma_failed = tasks
            .iter()
            .any(|t| t.task == TaskKind::Narma10 && t.failure.is_some());
        if reference.is_none() && wants_reference && !narma_failed {
            let bias = Some(cfg.tasks.reference_bias);
            match run_task(TaskKind::Narma10, setup, op, &seeds, bias, cfg) {
                Ok(runs) => reference = Some(runs),
                Err(e) => failures.push(format!("reference run: {e}")),
            }
        }

        if cfg.grid.tasks.contains(&TaskKind::Capacity) {
            let mut result = TaskResult::new(TaskKind::Capacity, "mc");
            match &reference {
                Some(r) => {
                    let reports: Result<Vec<_>> = r
                        .datasets
                        .iter()
                        .zip(&r.sims)
                        .map(|(d, s)| {
                            total_memory_capacity(
                                &s.states,
                                &d.input,
                                d.split.train_range(),
                                d.split.test_ranges()[0].clone(),
                                &cfg.capacity,
                            )
                        })
                        .collect();
                    match reports {
                        Ok(reports) => {
                            let order = |i: usize| {
                                mean_std(
                                    &reports.iter().map(|r| r.order_sum(i)).collect::<Vec<_>>(),
                                )
                                .0
                            };
                            result.per_seed = reports.iter().map(|r| r.total).collect();
                            result.bias = r.result.bias;
                            result = result.finish();
                            capacity = Some(CapacitySummary {
                                c1: order(1),
                                c2: order(2),
                                c3: order(3),
                                mc: result.mean.unwrap_or(f64::NAN),
                            });
                        }
                        Err(e) => {
                            failures.push(format!("capacity: {e}"));
                            result.failure = Some(e.to_string());
                        }
                    }
                }
                None => result.failure = Some("no reference run".into()),
            }
            tasks.push(result);
        }

        // the detuning spread is treated as task independent
        if let Some(r) = reference.as_ref().or(first_runs.as_ref()) {
            let per_seed: Vec<f64> = r
                .sims
                .iter()
                .map(|s| super::sigma_delta_nl(&s.run.trace))
                .collect();
            let mut result = TaskResult::new(TaskKind::Detuning, "sigma_hz");
            result.per_seed = per_seed;
            result.bias = r.result.bias;
            let result = result.finish();
            sigma = result.mean;
            if cfg.grid.tasks.contains(&TaskKind::Detuning) {
                tasks.push(result);
            }
        } else if cfg.grid.tasks.contains(&TaskKind::Detuning) {
            let mut result = TaskResult::new(TaskKind::Detuning, "sigma_hz");
            result.failure = Some("no reference run".into());
            tasks.push(result);
        }
    }

    let mut row = SweepResult {
        point,
        tasks,
        capacity,
        sigma_delta_nl_hz: sigma,
        self_pulsing,
        oscillation_depth: depth,
        region: super::Region::Unclassified,
        wall_time_s: start.elapsed().as_secs_f64(),
        failures,
    };
    row.region = row.classify(&cfg.regions);
    row
}
