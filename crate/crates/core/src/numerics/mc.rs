//! Reproducible random streams and batched-means statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random stream number `stream` under `seed`.
///
/// ChaCha is counter based, so each stream is a disjoint keystream and the
/// numbers a batch sees do not depend on which thread runs it.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-batch accumulators for an importance-sampling estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatchSums {
    pub count: u64,
    pub sum: f64,
    pub sum_abs: f64,
    pub sum_sq: f64,
}

impl BatchSums {
    pub fn push(&mut self, w: f64) {
        self.count += 1;
        self.sum += w;
        self.sum_abs += w.abs();
        self.sum_sq += w * w;
    }
}

/// Mean, batched-means standard error and effective sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub effective_samples: f64,
}

/// Combines batches in their given order, so the floating-point result only
/// depends on the batch decomposition.
pub fn combine_batches(batches: &[BatchSums]) -> BatchEstimate {
    let samples: u64 = batches.iter().map(|b| b.count).sum();
    let (mut sum, mut sum_abs, mut sum_sq) = (0.0, 0.0, 0.0);
    for b in batches {
        sum += b.sum;
        sum_abs += b.sum_abs;
        sum_sq += b.sum_sq;
    }
    if samples == 0 {
        return BatchEstimate { mean: 0.0, std_error: 0.0, samples, effective_samples: 0.0 };
    }
    let mean = sum / samples as f64;
    let used: Vec<&BatchSums> = batches.iter().filter(|b| b.count > 0).collect();
    let std_error = if used.len() > 1 {
        let var: f64 = used
            .iter()
            .map(|b| {
                let m = b.sum / b.count as f64;
                b.count as f64 * (m - mean) * (m - mean)
            })
            .sum::<f64>()
            / (used.len() - 1) as f64;
        (var / samples as f64).sqrt()
    } else {
        0.0
    };
    let effective_samples = if sum_sq > 0.0 { sum_abs * sum_abs / sum_sq } else { 0.0 };
    BatchEstimate { mean, std_error, samples, effective_samples }
}

/// Splits `samples` into `batches` nearly equal counts.
pub fn batch_sizes(samples: u64, batches: u64) -> Vec<u64> {
    let batches = batches.clamp(1, samples.max(1));
    let base = samples / batches;
    let extra = samples % batches;
    (0..batches).map(|b| base + u64::from(b < extra)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |seed, stream| {
            let mut r = stream_rng(seed, stream);
            (0..4).map(|_| r.random::<u64>()).collect::<Vec<_>>()
        };
        assert_eq!(draw(7, 3), draw(7, 3));
        assert_ne!(draw(7, 3), draw(7, 4));
    }

    #[test]
    fn batch_sizes_cover_all_samples() {
        let s = batch_sizes(1003, 10);
        assert_eq!(s.iter().sum::<u64>(), 1003);
        assert_eq!(s.len(), 10);
        assert_eq!(batch_sizes(3, 10).len(), 3);
    }

    #[test]
    fn constant_weights_have_zero_error() {
        let mut b = vec![BatchSums::default(); 4];
        for bs in b.iter_mut() {
            for _ in 0..10 {
                bs.push(2.0);
            }
        }
        let e = combine_batches(&b);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.std_error, 0.0);
        assert!((e.effective_samples - 40.0).abs() < 1e-9);
    }
}
