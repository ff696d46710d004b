//! Multiply-accumulate counts of the selective transform versus a dense
//! random-kernel baseline.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::kernels::KERNEL_LENGTH;
use crate::scattering::{FeatureDescriptor, Level, PathKey};

/// Baseline transform shape. The channel mix of the baseline's kernels is not
/// derivable from this model, so every field is caller-supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineParams {
    pub kernel_count: u64,
    pub mean_kernel_length: f64,
    pub mean_channels_per_kernel: f64,
}

impl BaselineParams {
    pub fn with_channels(mean_channels_per_kernel: f64) -> Self {
        Self {
            kernel_count: 10_000,
            mean_kernel_length: 9.0,
            mean_channels_per_kernel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacReport {
    pub lightwaves_macs: u64,
    pub baseline_macs: u64,
    pub ratio: f64,
    pub assumptions: BTreeMap<String, String>,
}

impl MacReport {
    pub const CSV_HEADER: &'static str =
        "series_length,lightwaves_macs,baseline_macs,ratio,baseline_kernels,baseline_kernel_length,baseline_channels";

    pub fn csv_row(&self, series_length: usize) -> String {
        format!(
            "{series_length},{},{},{},{},{},{}",
            self.lightwaves_macs,
            self.baseline_macs,
            self.ratio,
            self.assumptions["baseline_kernels"],
            self.assumptions["baseline_kernel_length"],
            self.assumptions["baseline_channels"],
        )
    }
}

/// MACs per sample of the selective transform: each unique path costs
/// `9 * L` at level one plus `9 * ceil(L / 2)` when any level-two statistic
/// of that path is selected.
pub fn lightwaves_macs(descriptors: &[FeatureDescriptor], series_length: usize) -> u64 {
    let mut paths: HashMap<PathKey, bool> = HashMap::new();
    for d in descriptors {
        *paths.entry(d.path()).or_default() |= d.level == Level::Two;
    }
    let l = series_length as u64;
    let k = KERNEL_LENGTH as u64;
    paths
        .values()
        .map(|&two| k * l + if two { k * l.div_ceil(2) } else { 0 })
        .sum()
}

pub fn estimate_macs(
    descriptors: &[FeatureDescriptor],
    series_length: usize,
    baseline: &BaselineParams,
) -> Result<MacReport> {
    if series_length == 0 {
        return Err(Error::invalid("series length must be >= 1"));
    }
    if descriptors.is_empty() {
        return Err(Error::invalid("model has no descriptors"));
    }
    if baseline.kernel_count == 0
        || baseline.mean_kernel_length.is_nan()
        || baseline.mean_kernel_length <= 0.0
        || baseline.mean_channels_per_kernel.is_nan()
        || baseline.mean_channels_per_kernel <= 0.0
    {
        return Err(Error::invalid("baseline parameters must be positive"));
    }
    let ours = lightwaves_macs(descriptors, series_length);
    let theirs = (baseline.kernel_count as f64
        * series_length as f64
        * baseline.mean_kernel_length
        * baseline.mean_channels_per_kernel)
        .round() as u64;
    let mut assumptions = BTreeMap::new();
    assumptions.insert("baseline_kernels".into(), baseline.kernel_count.to_string());
    assumptions.insert("baseline_kernel_length".into(), baseline.mean_kernel_length.to_string());
    assumptions.insert("baseline_channels".into(), baseline.mean_channels_per_kernel.to_string());
    Ok(MacReport {
        lightwaves_macs: ours,
        baseline_macs: theirs,
        ratio: theirs as f64 / ours as f64,
        assumptions,
    })
}
