//! Coordinator/worker training. Workers each own a contiguous channel range,
//! transform the shared training subsample and send back their best-scoring
//! features once; the coordinator runs the final selection and fits the
//! classifier.

mod coordinator;
pub mod pipe;
pub mod protocol;
mod worker;

use std::ops::Range;
use std::path::PathBuf;

use crate::classifier::default_alpha_grid;
use crate::error::{Error, Result};
use crate::scattering::Variant;

pub(crate) use coordinator::{accept_workers, connect_with_retry};
pub use coordinator::{coordinator_run, coordinator_run_with, train_in_process, TrainOutcome, Transport};
pub use worker::{run_assignment, worker_run, DatasetLoader, FileLoader, Preloaded};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub variant: Variant,
    pub final_features: usize,
    pub pool_size: usize,
    pub max_train_samples: usize,
    pub seed: u64,
    pub alpha_grid: Vec<f64>,
    pub dataset_path: PathBuf,
    pub worker_count: usize,
    /// Per-sample, per-channel z-normalisation before the transform.
    pub normalize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::L1L2,
            final_features: 500,
            pool_size: 2500,
            max_train_samples: 2048,
            seed: 0,
            alpha_grid: default_alpha_grid(),
            dataset_path: PathBuf::new(),
            worker_count: 1,
            normalize: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.worker_count == 0 {
            return Err(Error::invalid("worker count must be >= 1"));
        }
        if self.final_features == 0 {
            return Err(Error::invalid("final feature count must be >= 1"));
        }
        if self.final_features > self.pool_size {
            return Err(Error::invalid(format!(
                "final features {} exceed pool size {}",
                self.final_features, self.pool_size
            )));
        }
        if self.worker_count > u32::MAX as usize {
            return Err(Error::invalid("too many workers"));
        }
        Ok(())
    }

    /// Features a worker owning `worker_channels` of `n_channels` channels may
    /// return: its channel share of the pool, rounded up. With an even split
    /// this is `ceil(pool_size / worker_count)`; with an uneven one a worker
    /// is never cut below its share, so a pool covering every feature keeps
    /// every feature whatever the worker count.
    pub fn worker_quota(&self, worker_channels: usize, n_channels: usize) -> usize {
        if n_channels == 0 {
            return 0;
        }
        (self.pool_size as u128 * worker_channels as u128).div_ceil(n_channels as u128) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerAssignment {
    pub worker_id: u32,
    pub channel_range: Range<usize>,
    pub sample_indices: Vec<usize>,
    /// Class index of each row in `sample_indices`.
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub config: TrainConfig,
}

/// Contiguous, balanced split of `0..n_channels`; earlier workers take the
/// extra channel, workers beyond `n_channels` get empty ranges.
pub fn partition_channels(n_channels: usize, workers: usize) -> Vec<Range<usize>> {
    let workers = workers.max(1);
    let base = n_channels / workers;
    let extra = n_channels % workers;
    let mut start = 0;
    (0..workers)
        .map(|w| {
            let len = base + usize::from(w < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// splitmix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `0..bound` (rejection sampling, no modulo bias).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }
}

/// Training rows used for selection. All rows when `n <= max_samples`,
/// otherwise a stratified sample: per-class quotas proportional to class
/// frequency (largest remainder, at least one per class), rows drawn by a
/// partial Fisher-Yates shuffle per class. Returned sorted.
pub fn subsample(labels: &[usize], n_classes: usize, max_samples: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if max_samples < n_classes {
        return Err(Error::invalid(format!(
            "max train samples {max_samples} below class count {n_classes}"
        )));
    }
    if n <= max_samples {
        return Ok((0..n).collect());
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        members
            .get_mut(y)
            .ok_or_else(|| Error::invalid(format!("label {y} >= class count {n_classes}")))?
            .push(i);
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(Error::invalid(format!("class {empty} is empty")));
    }

    let mut quota: Vec<usize> = Vec::with_capacity(n_classes);
    let mut remainders: Vec<(usize, usize)> = Vec::with_capacity(n_classes);
    for (c, m) in members.iter().enumerate() {
        let num = max_samples as u128 * m.len() as u128;
        quota.push((num / n as u128) as usize);
        remainders.push(((num % n as u128) as usize, c));
    }
    let leftover = max_samples - quota.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in remainders.iter().take(leftover) {
        quota[c] += 1;
    }
    for c in 0..n_classes {
        if quota[c] == 0 {
            let donor = (0..n_classes)
                .max_by(|&a, &b| quota[a].cmp(&quota[b]).then(b.cmp(&a)))
                .expect("at least one class");
            quota[donor] -= 1;
            quota[c] = 1;
        }
    }

    let mut rng = SplitMix64::new(seed);
    let mut picked = Vec::with_capacity(max_samples);
    for (mut rows, q) in members.into_iter().zip(quota) {
        for i in 0..q {
            let j = i + rng.below((rows.len() - i) as u64) as usize;
            rows.swap(i, j);
        }
        picked.extend_from_slice(&rows[..q]);
    }
    picked.sort_unstable();
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_examples() {
        assert_eq!(partition_channels(10, 4), vec![0..3, 3..6, 6..8, 8..10]);
        assert_eq!(partition_channels(5, 1), vec![0..5]);
        assert_eq!(partition_channels(2, 3), vec![0..1, 1..2, 2..2]);
    }

    #[test]
    fn quota_follows_channel_share() {
        let cfg = TrainConfig { pool_size: 2500, worker_count: 4, ..TrainConfig::default() };
        assert_eq!(cfg.worker_quota(2, 8), 625);
        assert_eq!(cfg.worker_quota(2, 6), 834);
        assert_eq!(cfg.worker_quota(0, 6), 0);
        let total = TrainConfig { pool_size: 6 * 4032, worker_count: 4, ..TrainConfig::default() };
        for r in partition_channels(6, 4) {
            assert!(total.worker_quota(r.len(), 6) >= r.len() * 4032);
        }
    }

    #[test]
    fn subsample_noop_below_threshold() {
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        assert_eq!(subsample(&labels, 2, 2048, 1).unwrap(), (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn subsample_balanced_classes() {
        let labels: Vec<usize> = (0..4000).map(|i| i % 2).collect();
        let s = subsample(&labels, 2, 2048, 42).unwrap();
        assert_eq!(s.len(), 2048);
        assert_eq!(s.iter().filter(|&&i| labels[i] == 0).count(), 1024);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s, subsample(&labels, 2, 2048, 42).unwrap());
        assert_ne!(s, subsample(&labels, 2, 2048, 43).unwrap());
    }

    #[test]
    fn subsample_keeps_rare_class() {
        // 999 of class 0, 1 of class 1: proportional quota rounds to 0, bumped to 1
        let mut labels = vec![0usize; 999];
        labels.push(1);
        let s = subsample(&labels, 2, 10, 7).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.contains(&999));
    }

    #[test]
    fn subsample_errors() {
        let labels = vec![0usize, 0, 0];
        assert!(subsample(&labels, 2, 2, 0).is_err());
        assert!(subsample(&labels, 3, 2, 0).is_err());
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 0, from the published reference implementation
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    }
}
