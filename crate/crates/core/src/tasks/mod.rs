//! Benchmark datasets.
//!
//! Every dataset is laid out as one continuous stream
//! `[warm-up | train | (warm-up | test) x test_subsets]`, and `target[n]` is the
//! value the readout must produce from the reservoir state driven by `input[n]`.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pipeline::MaskRange;

mod channel;
mod narma;
mod radar;
mod waveform;

pub use channel::{gen_channel_equalization, ChannelModel};
pub use narma::{gen_narma10, narma10_series};
pub use radar::{gen_surrogate_radar, load_radar, radar_dataset, read_radar_csv, RadarIq};
pub use waveform::gen_waveform_classification;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Nmse,
    Accuracy,
    Ser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Split {
    pub warmup: usize,
    pub train: usize,
    pub test: usize,
    #[serde(default = "one")]
    pub test_subsets: usize,
}

fn one() -> usize {
    1
}

impl Split {
    pub fn new(warmup: usize, train: usize, test: usize) -> Self {
        Self {
            warmup,
            train,
            test,
            test_subsets: 1,
        }
    }

    pub fn total(&self) -> usize {
        self.warmup + self.train + self.test_subsets * (self.warmup + self.test)
    }

    /// Stream indices of the training rows.
    pub fn train_range(&self) -> Range<usize> {
        self.warmup..self.warmup + self.train
    }

    /// Stream indices of each test subset.
    pub fn test_ranges(&self) -> Vec<Range<usize>> {
        let first = self.warmup + self.train;
        (0..self.test_subsets)
            .map(|i| {
                let start = first + i * (self.warmup + self.test) + self.warmup;
                start..start + self.test
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub name: String,
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub split: Split,
    pub mask_range: MaskRange,
    /// Constant already added to `input` during preprocessing.
    pub input_bias_preshift: f64,
    pub metric: MetricKind,
    /// Waveform index of each sample, for tasks scored per waveform.
    pub groups: Option<Vec<usize>>,
    /// Seed that produced the data (differs from the requested one after a
    /// regeneration).
    pub seed_used: u64,
    pub notes: Vec<String>,
}

impl TaskDataset {
    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }
}

// Sub-stream ids keep the generators of different tasks (and the noise of the
// channel) independent for a shared seed.
pub(crate) const NARMA_STREAM: u64 = 1;
pub(crate) const WAVEFORM_STREAM: u64 = 2;
pub(crate) const SYMBOL_STREAM: u64 = 3;
pub(crate) const NOISE_STREAM: u64 = 4;
pub(crate) const RADAR_STREAM: u64 = 5;

pub(crate) fn task_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
