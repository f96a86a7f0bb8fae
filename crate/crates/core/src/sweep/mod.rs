//! Parameter sweeps over input power, pump detuning and carrier lifetime.

mod emit;
mod point;
mod run;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::capacity::CapacityConfig;
use crate::cavity::DetuningTrace;
use crate::error::{Error, Result};
use crate::experiment::{ReadoutOptions, ReservoirSetup};
use crate::feedback::SelfPulsingConfig;
use crate::tasks::Split;

pub use emit::{emit_results, long_csv, matrix_csv, matrix_files, LONG_HEADER};
pub use point::{evaluate_point, CapacitySummary, TaskResult};
pub use run::{run_sweep, SweepOptions, SweepOutcome};

/// A list of values or an inclusive `start..=stop` range with a fixed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Axis::List(v) => Ok(v.clone()),
            Axis::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) {
                    return Err(Error::Config(format!(
                        "range {start}..={stop} needs a positive step and stop >= start"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // computed from the index so no rounding error accumulates
                Ok((0..=n).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Narma10,
    Classify,
    Equalize,
    Radar,
    Capacity,
    Detuning,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Narma10 => "narma10",
            TaskKind::Classify => "classify",
            TaskKind::Equalize => "equalize",
            TaskKind::Radar => "radar",
            TaskKind::Capacity => "capacity",
            TaskKind::Detuning => "detuning",
        }
    }

    /// Tasks scored by a trained readout.
    pub fn is_benchmark(self) -> bool {
        matches!(
            self,
            TaskKind::Narma10 | TaskKind::Classify | TaskKind::Equalize | TaskKind::Radar
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub power_dbm: Axis,
    pub detuning_ghz: Axis,
    pub carrier_lifetimes_s: Vec<f64>,
    pub thermal_time_s: f64,
    pub seed_count: usize,
    pub first_seed: u64,
    pub tasks: Vec<TaskKind>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            power_dbm: Axis::Range {
                start: -20.0,
                stop: 20.0,
                step: 1.0,
            },
            detuning_ghz: Axis::Range {
                start: -300.0,
                stop: 300.0,
                step: 10.0,
            },
            carrier_lifetimes_s: vec![10e-12, 10e-9, 25e-9],
            thermal_time_s: 50e-9,
            seed_count: 10,
            first_seed: 1,
            tasks: vec![TaskKind::Narma10, TaskKind::Capacity, TaskKind::Detuning],
        }
    }
}

impl SweepGrid {
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.seed_count as u64)
            .map(|i| self.first_seed + i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarOptions {
    /// CSV with header `i,q`.
    pub path: Option<PathBuf>,
    /// Use the synthetic sea-clutter generator when no file is given.
    pub surrogate: bool,
    pub k: usize,
    pub split: Split,
}

impl Default for RadarOptions {
    fn default() -> Self {
        Self {
            path: None,
            surrogate: false,
            k: 1,
            split: Split::new(200, 1000, 1000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskOptions {
    pub narma10: Split,
    pub classify: Split,
    pub equalize: Split,
    pub snr_db: f64,
    pub radar: RadarOptions,
    /// Bias of the NARMA-10 reference run used for capacities and detuning when
    /// NARMA-10 itself is not part of the sweep.
    pub reference_bias: f64,
}

impl Default for TaskOptions {
    fn default() -> Self {
        Self {
            narma10: Split::new(200, 2000, 2000),
            classify: Split::new(200, 2000, 1000),
            equalize: Split {
                warmup: 200,
                train: 10_000,
                test: 10_000,
                test_subsets: 10,
            },
            snr_db: 32.0,
            radar: RadarOptions::default(),
            reference_bias: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    /// Below this detuning spread (Hz) a non-pulsing point counts as linear.
    pub linear_sigma_hz: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            linear_sigma_hz: 10e6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub reservoir: ReservoirSetup,
    pub grid: SweepGrid,
    pub readout: ReadoutOptions,
    pub capacity: CapacityConfig,
    pub tasks: TaskOptions,
    pub self_pulsing: SelfPulsingConfig,
    pub regions: RegionConfig,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.power_dbm.values()?.is_empty() || g.detuning_ghz.values()?.is_empty() {
            return Err(Error::Config(
                "power and detuning axes must be non-empty".into(),
            ));
        }
        if g.carrier_lifetimes_s.is_empty() {
            return Err(Error::Config("need at least one carrier lifetime".into()));
        }
        if g.seed_count == 0 {
            return Err(Error::Config("seed_count must be at least 1".into()));
        }
        if g.tasks.is_empty() {
            return Err(Error::Config("no tasks selected".into()));
        }
        let radar = &self.tasks.radar;
        if g.tasks.contains(&TaskKind::Radar) && radar.path.is_none() && !radar.surrogate {
            return Err(Error::Config(
                "the radar task needs `tasks.radar.path` or `tasks.radar.surrogate = true`".into(),
            ));
        }
        if self.readout.bias_grid.is_empty() {
            return Err(Error::Config("bias grid is empty".into()));
        }
        for &tau in &g.carrier_lifetimes_s {
            self.setup_for(tau)?
                .params(crate::experiment::OperatingPoint::new(0.0, 0.0))?;
        }
        Ok(())
    }

    /// Reservoir setup with the carrier lifetime and thermal time of the grid.
    pub fn setup_for(&self, carrier_lifetime_s: f64) -> Result<ReservoirSetup> {
        let mut s = self.reservoir.clone();
        s.cavity.carrier_lifetime_s = carrier_lifetime_s;
        s.cavity.thermal_time_s = self.grid.thermal_time_s;
        Ok(s)
    }

    /// Grid points in `(carrier lifetime, power, detuning)` order.
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        let powers = self.grid.power_dbm.values()?;
        let detunings = self.grid.detuning_ghz.values()?;
        let mut out = Vec::new();
        for &tau in &self.grid.carrier_lifetimes_s {
            for &p in &powers {
                for &d in &detunings {
                    out.push(GridPoint {
                        index: out.len(),
                        carrier_lifetime_s: tau,
                        power_dbm: p,
                        detuning_ghz: d,
                    });
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub carrier_lifetime_s: f64,
    pub power_dbm: f64,
    pub detuning_ghz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    C,
    #[serde(rename = "unclassified")]
    Unclassified,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::A => "A",
            Region::B => "B",
            Region::C => "C",
            Region::Unclassified => "unclassified",
        }
    }
}

/// Population standard deviation of the detuning trace, Hz.
pub fn sigma_delta_nl(trace: &DetuningTrace) -> f64 {
    trace.sigma()
}

/// C when self-pulsing, A when the detuning spread is below the linear
/// threshold, B otherwise. Points missing either input are unclassified.
pub fn classify_region(
    self_pulsing: Option<bool>,
    sigma_hz: Option<f64>,
    cfg: &RegionConfig,
) -> Region {
    match (self_pulsing, sigma_hz) {
        (Some(true), _) => Region::C,
        (Some(false), Some(s)) if s.is_finite() => {
            if s < cfg.linear_sigma_hz {
                Region::A
            } else {
                Region::B
            }
        }
        _ => Region::Unclassified,
    }
}

/// Everything recorded for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub point: GridPoint,
    pub tasks: Vec<TaskResult>,
    pub capacity: Option<CapacitySummary>,
    pub sigma_delta_nl_hz: Option<f64>,
    pub self_pulsing: Option<bool>,
    pub oscillation_depth: Option<f64>,
    pub region: Region,
    pub wall_time_s: f64,
    /// Errors that prevented parts of the point from being evaluated.
    pub failures: Vec<String>,
}

impl SweepResult {
    pub fn task(&self, kind: TaskKind) -> Option<&TaskResult> {
        self.tasks.iter().find(|t| t.task == kind)
    }

    pub fn classify(&self, cfg: &RegionConfig) -> Region {
        classify_region(self.self_pulsing, self.sigma_delta_nl_hz, cfg)
    }
}
