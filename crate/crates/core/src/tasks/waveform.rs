use std::f64::consts::TAU;

use rand::Rng;

use super::{task_rng, MetricKind, Split, TaskDataset, WAVEFORM_STREAM};
use crate::pipeline::MaskRange;

pub const SAMPLES_PER_PERIOD: usize = 12;

fn sine_period() -> impl Iterator<Item = f64> {
    (0..SAMPLES_PER_PERIOD).map(|k| (TAU * k as f64 / SAMPLES_PER_PERIOD as f64).sin())
}

fn square_period() -> impl Iterator<Item = f64> {
    (0..SAMPLES_PER_PERIOD).map(|k| {
        if k < SAMPLES_PER_PERIOD / 2 {
            1.0
        } else {
            -1.0
        }
    })
}

/// Randomly ordered sine and square periods (equal odds), 12 samples each; the
/// target is 1 on square samples and 0 on sine samples. The stream is cut to the
/// split length.
pub fn gen_waveform_classification(split: Split, seed: u64) -> TaskDataset {
    let len = split.total().max(1);
    let periods = len.div_ceil(SAMPLES_PER_PERIOD);
    let mut rng = task_rng(seed, WAVEFORM_STREAM);
    let mut input = Vec::with_capacity(periods * SAMPLES_PER_PERIOD);
    let mut target = Vec::with_capacity(input.capacity());
    let mut groups = Vec::with_capacity(input.capacity());
    for p in 0..periods {
        let square = rng.random_bool(0.5);
        if square {
            input.extend(square_period());
        } else {
            input.extend(sine_period());
        }
        target.extend(std::iter::repeat_n(
            if square { 1.0 } else { 0.0 },
            SAMPLES_PER_PERIOD,
        ));
        groups.extend(std::iter::repeat_n(p, SAMPLES_PER_PERIOD));
    }
    input.truncate(len);
    target.truncate(len);
    groups.truncate(len);
    TaskDataset {
        name: "classify".into(),
        input,
        target,
        split,
        mask_range: MaskRange::Unit,
        input_bias_preshift: 0.0,
        metric: MetricKind::Accuracy,
        groups: Some(groups),
        seed_used: seed,
        notes: Vec::new(),
    }
}
