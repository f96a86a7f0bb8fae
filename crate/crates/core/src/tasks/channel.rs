use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{task_rng, MetricKind, Split, TaskDataset, NOISE_STREAM, SYMBOL_STREAM};
use crate::pipeline::MaskRange;
use crate::readout::SYMBOLS;

/// Nonlinear wireless channel: a ten-tap FIR filter (two non-causal taps) followed
/// by a memoryless polynomial and additive Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    /// `(offset, coefficient)` pairs: `q(n) = sum c * d(n + offset)`.
    pub taps: [(isize, f64); 10],
    pub quadratic: f64,
    pub cubic: f64,
    pub snr_db: f64,
}

pub const CHANNEL_BIAS: f64 = 5.0;

impl ChannelModel {
    pub fn new(snr_db: f64) -> Self {
        Self {
            taps: [
                (2, 0.08),
                (1, -0.12),
                (0, 1.0),
                (-1, 0.18),
                (-2, -0.1),
                (-3, 0.091),
                (-4, -0.05),
                (-5, 0.04),
                (-6, 0.03),
                (-7, 0.01),
            ],
            quadratic: 0.036,
            cubic: -0.011,
            snr_db,
        }
    }

    /// Linear channel output; symbols outside the sequence count as zero.
    pub fn filter(&self, d: &[f64]) -> Vec<f64> {
        let len = d.len() as isize;
        (0..len)
            .map(|n| {
                self.taps
                    .iter()
                    .filter_map(|&(off, c)| {
                        let m = n + off;
                        (0..len).contains(&m).then(|| c * d[m as usize])
                    })
                    .sum()
            })
            .collect()
    }

    /// Memoryless distortion plus noise (no bias).
    pub fn distort(&self, q: f64, v: f64) -> f64 {
        q + self.quadratic * q * q + self.cubic * q * q * q + v
    }

    /// Noise standard deviation for a given channel-output variance.
    pub fn noise_std(&self, var_q: f64) -> f64 {
        (var_q / 10f64.powf(self.snr_db / 10.0)).sqrt()
    }
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self::new(32.0)
    }
}

fn population_variance(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64
}

/// Symbols uniform over {-3, -1, 1, 3}; the reservoir sees the distorted,
/// noisy channel output shifted by +5 and must recover the symbol sent at the
/// same index.
pub fn gen_channel_equalization(split: Split, seed: u64, snr_db: f64) -> TaskDataset {
    let len = split.total().max(10);
    let model = ChannelModel::new(snr_db);
    let mut rng = task_rng(seed, SYMBOL_STREAM);
    let d: Vec<f64> = (0..len).map(|_| SYMBOLS[rng.random_range(0..4)]).collect();
    let q = model.filter(&d);
    let noise =
        Normal::new(0.0, model.noise_std(population_variance(&q))).expect("finite noise level");
    let mut noise_rng = task_rng(seed, NOISE_STREAM);
    let input = q
        .iter()
        .map(|&qn| model.distort(qn, noise.sample(&mut noise_rng)) + CHANNEL_BIAS)
        .collect();
    TaskDataset {
        name: "equalize".into(),
        input,
        target: d,
        split,
        mask_range: MaskRange::Symmetric,
        input_bias_preshift: CHANNEL_BIAS,
        metric: MetricKind::Ser,
        groups: None,
        seed_used: seed,
        notes: Vec::new(),
    }
}
