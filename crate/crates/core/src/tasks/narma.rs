use rand::Rng;

use super::{task_rng, MetricKind, Split, TaskDataset, NARMA_STREAM};
use crate::pipeline::MaskRange;

const DIVERGENCE_LIMIT: f64 = 10.0;

/// Tenth-order NARMA recurrence driven by `u`, with zero history:
/// `y(n+1) = 0.3 y(n) + 0.05 y(n) sum_{i=0..9} y(n-i) + 1.5 u(n-9) u(n) + 0.1`
/// for `n >= 9`, and `y(0..=9) = 0`.
pub fn narma10_series(u: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; u.len()];
    for n in 9..u.len().saturating_sub(1) {
        let window: f64 = y[n - 9..=n].iter().sum();
        y[n + 1] = 0.3 * y[n] + 0.05 * y[n] * window + 1.5 * u[n - 9] * u[n] + 0.1;
    }
    y
}

/// NARMA-10 one-step-ahead prediction: row `n` (driven by `u(n)`) targets `y(n+1)`.
///
/// Inputs are uniform on `[0, 0.5]`. A seed whose recurrence leaves `|y| <= 10`
/// is replaced by the next seed and the substitution is noted.
pub fn gen_narma10(split: Split, seed: u64) -> TaskDataset {
    let len = split.total().max(10);
    let mut notes = Vec::new();
    let mut s = seed;
    loop {
        let mut rng = task_rng(s, NARMA_STREAM);
        let u: Vec<f64> = (0..=len).map(|_| rng.random_range(0.0..=0.5)).collect();
        let y = narma10_series(&u);
        if y.iter()
            .all(|v| v.is_finite() && v.abs() <= DIVERGENCE_LIMIT)
        {
            return TaskDataset {
                name: "narma10".into(),
                input: u[..len].to_vec(),
                target: y[1..=len].to_vec(),
                split,
                mask_range: MaskRange::Unit,
                input_bias_preshift: 0.0,
                metric: MetricKind::Nmse,
                groups: None,
                seed_used: s,
                notes,
            };
        }
        notes.push(format!(
            "seed {s} diverged; regenerated with seed {}",
            s + 1
        ));
        s += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_output_is_the_constant_term() {
        let y = narma10_series(&[0.0; 12]);
        assert!(y[..10].iter().all(|&v| v == 0.0));
        assert_eq!(y[10], 0.1);
    }

    #[test]
    fn zero_drive_converges_to_quadratic_root() {
        // fixed point of y = 0.3 y + 0.5 y^2 + 0.1
        let root = 0.7 - (0.49f64 - 0.2).sqrt();
        let y = narma10_series(&[0.0; 2000]);
        assert!((y[1999] - root).abs() < 1e-9, "{} vs {root}", y[1999]);
        assert!((root - 0.161_483).abs() < 1e-6);
    }

    #[test]
    fn recurrence_matches_hand_evaluation() {
        let u: Vec<f64> = (0..14).map(|i| 0.05 * i as f64).collect();
        let y = narma10_series(&u);
        // y(11) = 0.3 y(10) + 0.05 y(10)^2 + 1.5 u(1) u(10) + 0.1 with y(10) = 1.5 u(0) u(9) + 0.1
        let y10 = 1.5 * u[0] * u[9] + 0.1;
        let y11 = 0.3 * y10 + 0.05 * y10 * y10 + 1.5 * u[1] * u[10] + 0.1;
        assert!((y[10] - y10).abs() < 1e-15);
        assert!((y[11] - y11).abs() < 1e-15);
    }

    #[test]
    fn default_dataset_shape() {
        let split = Split::new(200, 2000, 2000);
        let d = gen_narma10(split, 1);
        assert_eq!(d.len(), 4400);
        assert_eq!(d.target.len(), 4400);
        assert_eq!(split.train_range().len(), 2000);
        assert_eq!(split.test_ranges()[0].len(), 2000);
        assert!(d.input.iter().all(|v| (0.0..=0.5).contains(v)));
        // target alignment: target[n] = y(n + 1)
        let mut u = d.input.clone();
        u.push(0.0);
        let y = narma10_series(&u);
        assert_eq!(&d.target[..4399], &y[1..4400]);
        assert_eq!(d, gen_narma10(split, 1));
        assert_ne!(d.input, gen_narma10(split, 2).input);
    }

    #[test]
    fn outputs_stay_bounded() {
        for seed in 0..20 {
            let d = gen_narma10(Split::new(200, 2000, 2000), seed);
            assert_eq!(d.len(), 4400);
            assert!(d.target.iter().all(|v| v.abs() <= 10.0));
            assert_eq!(d.notes.is_empty(), d.seed_used == seed);
        }
    }
}
