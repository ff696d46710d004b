//! Reduced two-level scattering: one same-kernel-twice path per
//! (channel, kernel, dilation), summarised by max/min of the moduli and the
//! positive-value statistics of the raw responses.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{downsample2, xcorr_into, KernelBank, N_DILATIONS, N_KERNELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Level {
    One,
    Two,
}

impl TryFrom<u8> for Level {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Level::One),
            2 => Ok(Level::Two),
            other => Err(format!("level {other} is not 1 or 2")),
        }
    }
}

impl From<Level> for u8 {
    fn from(l: Level) -> u8 {
        match l {
            Level::One => 1,
            Level::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Stat {
    Max,
    Min,
    Ppv,
    Ls,
}

impl Stat {
    pub const ALL: [Stat; 4] = [Stat::Max, Stat::Min, Stat::Ppv, Stat::Ls];

    pub(crate) fn index(self) -> usize {
        self as usize
    }

    pub(crate) fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

/// Which scattering levels contribute features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Variant {
    L1,
    L2,
    #[default]
    L1L2,
}

impl Variant {
    pub fn levels(self) -> &'static [Level] {
        match self {
            Variant::L1 => &[Level::One],
            Variant::L2 => &[Level::Two],
            Variant::L1L2 => &[Level::One, Level::Two],
        }
    }

    pub fn includes(self, level: Level) -> bool {
        self.levels().contains(&level)
    }

    /// Columns produced per (channel, kernel, dilation) path.
    pub fn features_per_path(self) -> usize {
        4 * self.levels().len()
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Variant::L1 => 1,
            Variant::L2 => 2,
            Variant::L1L2 => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Variant::L1),
            2 => Some(Variant::L2),
            3 => Some(Variant::L1L2),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::L1 => "L1",
            Variant::L2 => "L2",
            Variant::L1L2 => "L1L2",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L1" => Ok(Variant::L1),
            "L2" => Ok(Variant::L2),
            "L1L2" => Ok(Variant::L1L2),
            _ => Err(Error::invalid(format!("unknown variant {s:?}"))),
        }
    }
}

/// Identifies one scalar feature. The derived ordering (channel, kernel,
/// dilation exponent, level, statistic) is the canonical tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub channel: usize,
    pub kernel: u8,
    pub dilation_exp: u8,
    pub level: Level,
    pub stat: Stat,
}

impl FeatureDescriptor {
    pub fn new(channel: usize, kernel: usize, dilation_exp: usize, level: Level, stat: Stat) -> Self {
        Self {
            channel,
            kernel: kernel as u8,
            dilation_exp: dilation_exp as u8,
            level,
            stat,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel as usize >= N_KERNELS {
            return Err(Error::invalid(format!("kernel index {} >= {N_KERNELS}", self.kernel)));
        }
        if self.dilation_exp as usize >= N_DILATIONS {
            return Err(Error::invalid(format!(
                "dilation exponent {} >= {N_DILATIONS}",
                self.dilation_exp
            )));
        }
        Ok(())
    }

    pub fn path(&self) -> PathKey {
        PathKey {
            channel: self.channel,
            kernel: self.kernel,
            dilation_exp: self.dilation_exp,
        }
    }

    /// Position of this statistic within the eight path features.
    fn slot(&self) -> usize {
        let base = if self.level == Level::One { 0 } else { 4 };
        base + self.stat.index()
    }
}

impl fmt::Display for FeatureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c{}/k{}/d{}/L{}/{:?}",
            self.channel,
            self.kernel,
            1u32 << self.dilation_exp,
            u8::from(self.level),
            self.stat
        )
    }
}

/// One (channel, kernel, dilation) scattering path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathKey {
    pub channel: usize,
    pub kernel: u8,
    pub dilation_exp: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathFeatures {
    pub max1: f64,
    pub min1: f64,
    pub ppv1: f64,
    pub ls1: f64,
    pub max2: f64,
    pub min2: f64,
    pub ppv2: f64,
    pub ls2: f64,
}

impl PathFeatures {
    fn from_array(a: [f64; 8]) -> Self {
        Self {
            max1: a[0],
            min1: a[1],
            ppv1: a[2],
            ls1: a[3],
            max2: a[4],
            min2: a[5],
            ppv2: a[6],
            ls2: a[7],
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.max1, self.min1, self.ppv1, self.ls1, self.max2, self.min2, self.ppv2, self.ls2,
        ]
    }

    pub fn get(&self, level: Level, stat: Stat) -> f64 {
        let base = if level == Level::One { 0 } else { 4 };
        self.to_array()[base + stat.index()]
    }
}

/// Fraction of entries strictly greater than zero.
pub fn ppv(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::invalid("empty series"));
    }
    Ok(y.iter().filter(|&&v| v > 0.0).count() as f64 / y.len() as f64)
}

/// Longest run of strictly positive entries, divided by the series length.
pub fn lspv(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::invalid("empty series"));
    }
    Ok(summarize(y)[3])
}

/// [max |y|, min |y|, ppv(y), lspv(y)] in a single pass.
fn summarize(y: &[f64]) -> [f64; 4] {
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut positive = 0usize;
    let mut run = 0usize;
    let mut longest = 0usize;
    for &v in y {
        let a = v.abs();
        max = max.max(a);
        min = min.min(a);
        if v > 0.0 {
            positive += 1;
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    let n = y.len() as f64;
    [max, min, positive as f64 / n, longest as f64 / n]
}

/// Reusable buffers for evaluating paths over series of one length.
struct PathScratch {
    y1: Vec<f64>,
    down: Vec<f64>,
    y2: Vec<f64>,
}

impl PathScratch {
    fn new(len: usize) -> Self {
        let half = len.div_ceil(2);
        Self {
            y1: vec![0.0; len],
            down: vec![0.0; half],
            y2: vec![0.0; half],
        }
    }

    /// Returns the eight path statistics; level-2 entries are zero when
    /// `level2` is false (that convolution is skipped).
    fn eval(&mut self, x: &[f64], w: &[f64], dilation: usize, level2: bool) -> [f64; 8] {
        if self.y1.len() != x.len() {
            *self = Self::new(x.len());
        }
        xcorr_into(x, w, dilation, &mut self.y1);
        let s1 = summarize(&self.y1);
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&s1);
        if level2 {
            for (d, v) in self.down.iter_mut().zip(self.y1.iter().step_by(2)) {
                *d = v.abs();
            }
            xcorr_into(&self.down, w, dilation, &mut self.y2);
            out[4..].copy_from_slice(&summarize(&self.y2));
        }
        out
    }
}

/// Full two-level path for one series: `y1 = x * w`, `U1 = |y1|`,
/// `y2 = downsample(U1) * w` at the same dilation, `U2 = |y2|`.
pub fn scatter_path(x: &[f64], w: &[f64], dilation: usize) -> Result<PathFeatures> {
    let y1 = crate::kernels::dilated_xcorr(x, w, dilation)?;
    let u1: Vec<f64> = y1.iter().map(|v| v.abs()).collect();
    let y2 = crate::kernels::dilated_xcorr(&downsample2(&u1), w, dilation)?;
    let a = summarize(&y1);
    let b = summarize(&y2);
    Ok(PathFeatures::from_array([
        a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3],
    ]))
}

/// Dense feature matrix, column-major: column `j` holds descriptor `j` over
/// all rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    descriptors: Vec<FeatureDescriptor>,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_columns(n_rows: usize, descriptors: Vec<FeatureDescriptor>, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * descriptors.len() {
            return Err(Error::Shape(format!(
                "{} values for {n_rows}x{} matrix",
                data.len(),
                descriptors.len()
            )));
        }
        Ok(Self {
            n_rows,
            descriptors,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.descriptors.len()
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.descriptors
    }

    pub fn descriptors_mut(&mut self) -> &mut [FeatureDescriptor] {
        &mut self.descriptors
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.n_rows + row]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n_cols()).map(|j| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> impl Iterator<Item = (&FeatureDescriptor, &[f64])> {
        self.descriptors.iter().zip(self.data.chunks(self.n_rows.max(1)))
    }
}

/// Evaluates every (channel, kernel, dilation) path of every sample. Columns
/// follow descriptor order; there are `C * 84 * 6 * 4 * levels` of them.
pub fn transform_full(
    dataset: &crate::io::TimeSeriesDataset,
    bank: &KernelBank,
    variant: Variant,
) -> Result<FeatureMatrix> {
    let n = dataset.n_samples();
    if n == 0 {
        return Err(Error::invalid("empty dataset"));
    }
    let paths: Vec<PathKey> = (0..dataset.n_channels())
        .flat_map(|channel| {
            (0..N_KERNELS).flat_map(move |k| {
                (0..N_DILATIONS).map(move |e| PathKey {
                    channel,
                    kernel: k as u8,
                    dilation_exp: e as u8,
                })
            })
        })
        .collect();
    let levels = variant.levels();
    let per_path = variant.features_per_path();
    let level2 = variant.includes(Level::Two);

    let mut descriptors = Vec::with_capacity(paths.len() * per_path);
    for p in &paths {
        for &level in levels {
            for stat in Stat::ALL {
                descriptors.push(FeatureDescriptor {
                    channel: p.channel,
                    kernel: p.kernel,
                    dilation_exp: p.dilation_exp,
                    level,
                    stat,
                });
            }
        }
    }

    let mut data = vec![0.0; descriptors.len() * n];
    data.par_chunks_mut(per_path * n)
        .zip(paths.par_iter())
        .for_each_init(
            || PathScratch::new(dataset.series_length()),
            |scratch, (block, p)| {
                let w = bank.kernel(p.kernel as usize);
                let d = bank.dilation(p.dilation_exp as usize);
                for i in 0..n {
                    let f = scratch.eval(dataset.series(i, p.channel), w, d, level2);
                    for (li, &level) in levels.iter().enumerate() {
                        let base = if level == Level::One { 0 } else { 4 };
                        for s in 0..4 {
                            block[(li * 4 + s) * n + i] = f[base + s];
                        }
                    }
                }
            },
        );
    FeatureMatrix::from_columns(n, descriptors, data)
}

/// Convolutions executed by a selective transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConvCount {
    pub level1: usize,
    pub level2: usize,
}

impl ConvCount {
    pub fn total(&self) -> usize {
        self.level1 + self.level2
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PlannedPath {
    key: PathKey,
    level2: bool,
}

/// Precomputed grouping of a descriptor list into unique paths, so each path
/// is evaluated once per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectivePlan {
    n_channels: usize,
    paths: Vec<PlannedPath>,
    /// For every requested descriptor: (path index, statistic slot 0..8).
    slots: Vec<(usize, usize)>,
}

impl SelectivePlan {
    pub fn new(descriptors: &[FeatureDescriptor], n_channels: usize) -> Result<Self> {
        if descriptors.is_empty() {
            return Err(Error::invalid("no descriptors to evaluate"));
        }
        let mut index: HashMap<PathKey, usize> = HashMap::new();
        let mut paths: Vec<PlannedPath> = Vec::new();
        let mut slots = Vec::with_capacity(descriptors.len());
        for d in descriptors {
            d.validate()?;
            if d.channel >= n_channels {
                return Err(Error::Shape(format!(
                    "descriptor channel {} out of range for {n_channels} channels",
                    d.channel
                )));
            }
            let key = d.path();
            let p = *index.entry(key).or_insert_with(|| {
                paths.push(PlannedPath { key, level2: false });
                paths.len() - 1
            });
            if d.level == Level::Two {
                paths[p].level2 = true;
            }
            slots.push((p, d.slot()));
        }
        Ok(Self {
            n_channels,
            paths,
            slots,
        })
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn n_features(&self) -> usize {
        self.slots.len()
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Unique paths and whether each one needs its level-2 convolution.
    pub fn paths(&self) -> impl Iterator<Item = (PathKey, bool)> + '_ {
        self.paths.iter().map(|p| (p.key, p.level2))
    }

    fn check_sample(&self, sample: &[f64]) -> Result<usize> {
        if sample.is_empty() || !sample.len().is_multiple_of(self.n_channels) {
            return Err(Error::Shape(format!(
                "sample of {} values is not {} equal channels",
                sample.len(),
                self.n_channels
            )));
        }
        Ok(sample.len() / self.n_channels)
    }

    fn gather(&self, evaluated: &[[f64; 8]]) -> Vec<f64> {
        self.slots.iter().map(|&(p, s)| evaluated[p][s]).collect()
    }

    /// Features of one `C * L` sample, in descriptor order.
    pub fn apply(&self, bank: &KernelBank, sample: &[f64]) -> Result<Vec<f64>> {
        self.apply_counted(bank, sample, &mut ConvCount::default())
    }

    pub fn apply_counted(&self, bank: &KernelBank, sample: &[f64], count: &mut ConvCount) -> Result<Vec<f64>> {
        let len = self.check_sample(sample)?;
        let mut scratch = PathScratch::new(len);
        let evaluated: Vec<[f64; 8]> = self
            .paths
            .iter()
            .map(|p| {
                count.level1 += 1;
                count.level2 += p.level2 as usize;
                let x = &sample[p.key.channel * len..(p.key.channel + 1) * len];
                scratch.eval(
                    x,
                    bank.kernel(p.key.kernel as usize),
                    bank.dilation(p.key.dilation_exp as usize),
                    p.level2,
                )
            })
            .collect();
        Ok(self.gather(&evaluated))
    }

    /// Same as [`apply`](Self::apply) with paths spread over the current
    /// rayon pool. Bit-identical to the sequential result.
    pub fn apply_par(&self, bank: &KernelBank, sample: &[f64]) -> Result<Vec<f64>> {
        let len = self.check_sample(sample)?;
        let evaluated: Vec<[f64; 8]> = self
            .paths
            .par_iter()
            .map_init(
                || PathScratch::new(len),
                |scratch, p| {
                    let x = &sample[p.key.channel * len..(p.key.channel + 1) * len];
                    scratch.eval(
                        x,
                        bank.kernel(p.key.kernel as usize),
                        bank.dilation(p.key.dilation_exp as usize),
                        p.level2,
                    )
                },
            )
            .collect();
        Ok(self.gather(&evaluated))
    }

    /// Row-parallel evaluation over every sample of a dataset.
    pub fn apply_dataset(&self, bank: &KernelBank, dataset: &crate::io::TimeSeriesDataset) -> Result<Vec<Vec<f64>>> {
        if dataset.n_channels() != self.n_channels {
            return Err(Error::Shape(format!(
                "dataset has {} channels, plan expects {}",
                dataset.n_channels(),
                self.n_channels
            )));
        }
        (0..dataset.n_samples())
            .into_par_iter()
            .map(|i| self.apply(bank, dataset.sample(i)))
            .collect()
    }
}

/// Features for `descriptors` on one `C * L` sample, in the given order.
pub fn transform_selected(
    sample: &[f64],
    n_channels: usize,
    bank: &KernelBank,
    descriptors: &[FeatureDescriptor],
) -> Result<Vec<f64>> {
    SelectivePlan::new(descriptors, n_channels)?.apply(bank, sample)
}
