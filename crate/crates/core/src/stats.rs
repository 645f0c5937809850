//! Running moments and bootstrap confidence bounds for Monte-Carlo work.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Welford accumulator; `merge` combines partial results (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Two-sided percentile bootstrap interval of `statistic` over resampled
/// trial indices.
pub fn bootstrap_interval<F>(n: usize, resamples: usize, level: f64, seed: u64, statistic: F) -> (f64, f64)
where
    F: Fn(&[usize]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; n];
    let mut values: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in idx.iter_mut() {
                *slot = rng.random_range(0..n);
            }
            statistic(&idx)
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let lo = ((tail * resamples as f64).floor() as usize).min(resamples - 1);
    let hi = (((1.0 - tail) * resamples as f64).ceil() as usize).saturating_sub(1).min(resamples - 1);
    (values[lo], values[hi])
}

/// Bootstrap interval of the mean of paired differences.
pub fn paired_mean_interval(diffs: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    bootstrap_interval(diffs.len(), resamples, level, seed, |idx| {
        idx.iter().map(|&i| diffs[i]).sum::<f64>() / idx.len() as f64
    })
}
