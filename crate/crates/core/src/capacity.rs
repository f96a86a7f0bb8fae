//! Linear and nonlinear memory capacities of a reservoir.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::StateMatrix;
use crate::readout::{default_lambdas, nmse, predict, RidgeCv};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    pub max_order: usize,
    pub k_max: usize,
    /// Map the input affinely from `input_range` onto `[-1, 1]` before
    /// evaluating the polynomials. Off evaluates them on the raw input.
    pub rescale_input: bool,
    pub input_range: (f64, f64),
    pub floor_negative: bool,
    /// Zero every capacity below `2 / sqrt(test rows)`.
    pub noise_threshold: bool,
    pub lambdas: Vec<f64>,
    pub folds: usize,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self {
            max_order: 3,
            k_max: 50,
            rescale_input: true,
            input_range: (0.0, 0.5),
            floor_negative: true,
            noise_threshold: true,
            lambdas: default_lambdas(),
            folds: 5,
        }
    }
}

/// `P1 = x`, `P2 = 3x^2 - 1`, `P3 = (5x^3 - 3x) / 2`.
///
/// `P2` is twice the textbook polynomial; capacities do not depend on the
/// target scale.
pub fn legendre(order: usize, x: f64) -> Result<f64> {
    match order {
        1 => Ok(x),
        2 => Ok(3.0 * x * x - 1.0),
        3 => Ok((5.0 * x * x * x - 3.0 * x) / 2.0),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

/// Affine map of `[lo, hi]` onto `[-1, 1]`.
pub fn rescale_to_unit(u: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    u.iter().map(|x| 2.0 * (x - lo) / (hi - lo) - 1.0).collect()
}

/// `y(n) = P_order(x(n - k))`, with `x` taken as zero before the start.
pub fn legendre_target(order: usize, k: usize, x: &[f64]) -> Result<Vec<f64>> {
    let before = legendre(order, 0.0)?;
    (0..x.len())
        .map(|n| {
            if n < k {
                Ok(before)
            } else {
                legendre(order, x[n - k])
            }
        })
        .collect()
}

/// Ridge readout shared by every capacity target of one state matrix.
pub struct CapacityEstimator {
    cv: RidgeCv,
    test_states: StateMatrix,
    train: Range<usize>,
    test: Range<usize>,
    noise_floor: f64,
    floor_negative: bool,
    noise_threshold: bool,
}

impl CapacityEstimator {
    /// `states` holds one row per stream index; `train` and `test` select rows.
    pub fn new(
        states: &StateMatrix,
        train: Range<usize>,
        test: Range<usize>,
        cfg: &CapacityConfig,
    ) -> Result<Self> {
        if train.end > states.rows() || test.end > states.rows() || test.is_empty() {
            return Err(Error::Shape(format!(
                "rows {train:?} / {test:?} outside a {}-row state matrix",
                states.rows()
            )));
        }
        if train.start < test.end && test.start < train.end {
            return Err(Error::Shape("training and test rows overlap".into()));
        }
        Ok(Self {
            cv: RidgeCv::new(&states.slice_rows(train.clone()), &cfg.lambdas, cfg.folds)?,
            test_states: states.slice_rows(test.clone()),
            noise_floor: 2.0 / (test.len() as f64).sqrt(),
            train,
            test,
            floor_negative: cfg.floor_negative,
            noise_threshold: cfg.noise_threshold,
        })
    }

    pub fn noise_floor(&self) -> f64 {
        self.noise_floor
    }

    /// Held-out `1 - NMSE` for a target defined over the whole stream, before
    /// flooring and thresholding.
    pub fn raw_capacity(&self, target: &[f64]) -> Result<f64> {
        let model = self.cv.fit(&target[self.train.clone()])?;
        let pred = predict(&model, &self.test_states)?;
        match nmse(&pred, &target[self.test.clone()]) {
            Ok(e) => Ok(1.0 - e),
            // a constant target carries no information about the input
            Err(Error::ZeroVariance) => Ok(0.0),
            Err(e) => Err(e),
        }
    }

    pub fn capacity_of(&self, target: &[f64]) -> Result<f64> {
        let mut c = self.raw_capacity(target)?;
        if self.floor_negative {
            c = c.max(0.0);
        }
        if self.noise_threshold && c < self.noise_floor {
            c = 0.0;
        }
        Ok(c)
    }

    /// Capacity for the order-`order` polynomial of the input `k` steps back.
    pub fn capacity(&self, x: &[f64], order: usize, k: usize) -> Result<f64> {
        self.capacity_of(&legendre_target(order, k, x)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    /// `curves[i - 1][k - 1]` is the order-`i` capacity at delay `k`.
    pub curves: Vec<Vec<f64>>,
    /// Sum of each curve.
    pub sums: Vec<f64>,
    pub total: f64,
    pub noise_floor: f64,
}

impl CapacityReport {
    pub fn order_sum(&self, order: usize) -> f64 {
        self.sums.get(order.wrapping_sub(1)).copied().unwrap_or(0.0)
    }

    /// Columns `order,k,capacity`; each order ends with a `sum` row and the
    /// file with an `all,sum` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,k,capacity\n");
        for (i, curve) in self.curves.iter().enumerate() {
            for (k, c) in curve.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", i + 1, k + 1, c));
            }
            out.push_str(&format!("{},sum,{}\n", i + 1, self.sums[i]));
        }
        out.push_str(&format!("all,sum,{}\n", self.total));
        out
    }
}

/// Capacities for orders `1..=max_order` and delays `1..=k_max` of the input
/// `u` (one value per state row).
pub fn total_memory_capacity(
    states: &StateMatrix,
    u: &[f64],
    train: Range<usize>,
    test: Range<usize>,
    cfg: &CapacityConfig,
) -> Result<CapacityReport> {
    if u.len() != states.rows() {
        return Err(Error::Shape(format!(
            "{} inputs for {} state rows",
            u.len(),
            states.rows()
        )));
    }
    let x = if cfg.rescale_input {
        rescale_to_unit(u, cfg.input_range.0, cfg.input_range.1)
    } else {
        u.to_vec()
    };
    let est = CapacityEstimator::new(states, train, test, cfg)?;
    let jobs: Vec<(usize, usize)> = (1..=cfg.max_order)
        .flat_map(|i| (1..=cfg.k_max).map(move |k| (i, k)))
        .collect();
    let values = jobs
        .par_iter()
        .map(|&(i, k)| est.capacity(&x, i, k))
        .collect::<Result<Vec<f64>>>()?;
    let curves: Vec<Vec<f64>> = values
        .chunks(cfg.k_max.max(1))
        .map(<[f64]>::to_vec)
        .collect();
    let sums: Vec<f64> = curves.iter().map(|c| c.iter().sum()).collect();
    Ok(CapacityReport {
        total: sums.iter().sum(),
        curves,
        sums,
        noise_floor: est.noise_floor(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(0.0..=0.5)).collect()
    }

    /// Row `n` holds `u(n - 1 - j)` for `j < taps`.
    fn delay_line(u: &[f64], taps: usize, skip_current: bool) -> StateMatrix {
        let start = usize::from(skip_current);
        let mut f = Vec::with_capacity(u.len() * taps);
        for n in 0..u.len() {
            for j in 0..taps {
                let d = j + start;
                f.push(if n >= d { u[n - d] } else { 0.0 });
            }
        }
        StateMatrix::from_features(u.len(), taps, &f).unwrap()
    }

    #[test]
    fn polynomials() {
        assert_eq!(legendre(2, 1.0).unwrap(), 2.0);
        assert_eq!(legendre(3, 0.0).unwrap(), 0.0);
        assert_eq!(legendre(3, 1.0).unwrap(), 1.0);
        assert!(matches!(legendre(4, 0.0), Err(Error::UnsupportedOrder(4))));
        assert!(matches!(legendre(0, 0.0), Err(Error::UnsupportedOrder(0))));
        let x = [0.3, -0.7, 1.0];
        assert_eq!(legendre_target(1, 0, &x).unwrap(), x.to_vec());
        assert_eq!(legendre_target(1, 1, &x).unwrap(), vec![0.0, 0.3, -0.7]);
        assert_eq!(
            rescale_to_unit(&[0.0, 0.25, 0.5], 0.0, 0.5),
            vec![-1.0, 0.0, 1.0]
        );
    }

    #[test]
    fn orthogonality_on_uniform_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..100_000).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let corr = |a: &[f64], b: &[f64]| {
            let n = a.len() as f64;
            let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
            let cov: f64 = a.iter().zip(b).map(|(p, q)| (p - ma) * (q - mb)).sum();
            let va: f64 = a.iter().map(|p| (p - ma).powi(2)).sum();
            let vb: f64 = b.iter().map(|q| (q - mb).powi(2)).sum();
            cov / (va * vb).sqrt()
        };
        let p: Vec<Vec<f64>> = (1..=3)
            .map(|i| legendre_target(i, 0, &x).unwrap())
            .collect();
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!(corr(&p[i], &p[j]).abs() < 0.02, "{i} {j}");
            }
        }
    }

    #[test]
    fn copy_of_input_has_unit_capacity() {
        let u = uniform(1200, 1);
        let x = rescale_to_unit(&u, 0.0, 0.5);
        let s = delay_line(&u, 3, false);
        let est =
            CapacityEstimator::new(&s, 100..700, 700..1200, &CapacityConfig::default()).unwrap();
        assert!((est.capacity(&x, 1, 0).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shuffled_target_is_noise() {
        let u = uniform(1200, 2);
        let x = rescale_to_unit(&u, 0.0, 0.5);
        let s = delay_line(&u, 5, false);
        let mut y = legendre_target(1, 0, &x).unwrap();
        y.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
        let est =
            CapacityEstimator::new(&s, 100..700, 700..1200, &CapacityConfig::default()).unwrap();
        assert!(est.raw_capacity(&y).unwrap() < est.noise_floor());
        assert_eq!(est.capacity_of(&y).unwrap(), 0.0);
    }

    #[test]
    fn memoryless_reservoir() {
        let u = uniform(1500, 3);
        let x = rescale_to_unit(&u, 0.0, 0.5);
        let s = delay_line(&u, 1, false);
        let est =
            CapacityEstimator::new(&s, 100..800, 800..1500, &CapacityConfig::default()).unwrap();
        assert!((est.capacity(&x, 1, 0).unwrap() - 1.0).abs() < 1e-9);
        for k in 1..10 {
            assert_eq!(est.capacity(&x, 1, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn delay_line_capacity() {
        let n = 50;
        let u = uniform(4000, 4);
        let s = delay_line(&u, n, true);
        let cfg = CapacityConfig::default();
        let r = total_memory_capacity(&s, &u, 200..2200, 2400..4000, &cfg).unwrap();
        assert!(
            (r.order_sum(1) - n as f64).abs() < 0.5,
            "{}",
            r.order_sum(1)
        );
        assert!(r.order_sum(2) + r.order_sum(3) < 1.0, "{:?}", r.sums);
        assert!((r.total - r.sums.iter().sum::<f64>()).abs() == 0.0);
        assert!(r.curves.iter().flatten().all(|c| (0.0..=1.0).contains(c)));
        assert_eq!(r.curves.len(), 3);
        assert_eq!(r.curves[0].len(), 50);
    }

    #[test]
    fn constant_states_carry_nothing() {
        let u = uniform(1000, 6);
        let s = StateMatrix::from_features(1000, 4, &vec![0.7; 4000]).unwrap();
        let cfg = CapacityConfig {
            k_max: 5,
            ..Default::default()
        };
        let r = total_memory_capacity(&s, &u, 0..500, 500..1000, &cfg).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn csv_layout() {
        let r = CapacityReport {
            curves: vec![vec![0.5, 0.25], vec![0.0, 0.0]],
            sums: vec![0.75, 0.0],
            total: 0.75,
            noise_floor: 0.1,
        };
        assert_eq!(
            r.to_csv(),
            "order,k,capacity\n1,1,0.5\n1,2,0.25\n1,sum,0.75\n2,1,0\n2,2,0\n2,sum,0\nall,sum,0.75\n"
        );
    }

    #[test]
    fn overlapping_rows_rejected() {
        let u = uniform(100, 7);
        let s = delay_line(&u, 2, false);
        assert!(CapacityEstimator::new(&s, 0..60, 50..100, &CapacityConfig::default()).is_err());
    }
}
